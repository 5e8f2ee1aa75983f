// Command-line driver: load a CSV dataset, configure a model, prior and
// sampler, run one or more HMC chains (optionally in stages), and write
// samples, trajectories and a JSON summary to disk.
//
// Exit codes: 0 success, 2 configuration error, 3 infeasible starting
// point, 4 data error.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bayesel/bayesel.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ----------------------------------------------------------------------
// Options as given on the command line (after defaulting).
// ----------------------------------------------------------------------

struct RunOptions {
  std::string data_path;
  std::string model_name;
  double rate = 0.06179;
  bool rate_given = false;
  std::string prior_spec = "flat";
  std::vector<double> initial;
  int n_samples = 100;
  int lf_steps = 10;
  std::vector<double> epsilon{0.05};
  double p_variance = 1.0;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  int burn_in = 0;
  bool detailed = false;
  std::string out_dir;  // resolved against BAYESEL_OUT_DIR when empty
  int chains = 1;
  std::vector<std::string> stages;
};

// Settings that --stages specs may override per stage.
struct StageSettings {
  int n_samples = 0;
  int lf_steps = 0;
  std::vector<double> epsilon;
  double p_variance = 1.0;
  int burn_in = 0;
};

struct GenOptions {
  int n = 1000;
  // defaults calibrated so the marginal rate of y equals 0.06179 and the
  // posterior is soft enough for leapfrog steps of 0.004 at momentum
  // variance 0.02 (the two-stage fertility protocol)
  double beta0 = -4.116172611960659;
  double beta1 = 2.0;
  double x_rate = 0.5;
  std::uint64_t seed = 24;
  std::string out_path;
};

// ----------------------------------------------------------------------
// Small parsers.
// ----------------------------------------------------------------------

double parse_double_strict(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw std::invalid_argument(what + ": expected a finite number, got '" + text + "'");
  }
  return v;
}

int parse_int_strict(const std::string& text, const std::string& what) {
  const double v = parse_double_strict(text, what);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw std::invalid_argument(what + ": expected an integer, got '" + text + "'");
  }
  return i;
}

std::vector<double> parse_list(const std::string& text, char sep, const std::string& what) {
  std::vector<double> out;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, sep)) out.push_back(parse_double_strict(token, what));
  if (out.empty()) throw std::invalid_argument(what + ": empty list");
  return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// "flat" or "normal:MEAN,VARIANCE"; either side may be a ';'-separated
// per-coordinate list or a single shared value.
bayesel::Prior make_prior(const std::string& spec, int d) {
  if (spec == "flat") return bayesel::flat_prior();
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  if (kind != "normal") {
    throw std::invalid_argument("unknown prior '" + spec +
                                "' (expected 'flat' or 'normal:MEAN,VARIANCE')");
  }
  if (colon == std::string::npos || colon + 1 >= spec.size()) {
    throw std::invalid_argument("prior 'normal' needs parameters, e.g. normal:0,1");
  }
  const std::string args = spec.substr(colon + 1);
  const auto comma = args.find(',');
  if (comma == std::string::npos) {
    throw std::invalid_argument("prior 'normal' needs a mean and a variance, e.g. normal:0,1");
  }
  auto broadcast = [d](std::vector<double> v, const std::string& what) {
    if (v.size() == 1) v.assign(static_cast<std::size_t>(d), v[0]);
    if (v.size() != static_cast<std::size_t>(d)) {
      throw std::invalid_argument("prior " + what + " must have 1 or " + std::to_string(d) +
                                  " entries");
    }
    return v;
  };
  const auto mean = broadcast(parse_list(args.substr(0, comma), ';', "prior mean"), "mean");
  const auto var =
      broadcast(parse_list(args.substr(comma + 1), ';', "prior variance"), "variance");
  return bayesel::normal_prior(to_vector(mean), to_vector(var));
}

// "key=value,key=value" with keys n-samples, lf-steps, epsilon,
// p-variance, burn-in; epsilon values use ';' between coordinates.
StageSettings apply_stage_spec(StageSettings base, const std::string& spec) {
  std::string pair;
  std::stringstream ss(spec);
  while (std::getline(ss, pair, ',')) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("stage spec entry '" + pair + "' is not key=value");
    }
    const std::string key = pair.substr(0, eq);
    const std::string value = pair.substr(eq + 1);
    if (key == "n-samples") {
      base.n_samples = parse_int_strict(value, "stage n-samples");
    } else if (key == "lf-steps") {
      base.lf_steps = parse_int_strict(value, "stage lf-steps");
    } else if (key == "epsilon") {
      base.epsilon = parse_list(value, ';', "stage epsilon");
    } else if (key == "p-variance") {
      base.p_variance = parse_double_strict(value, "stage p-variance");
    } else if (key == "burn-in") {
      base.burn_in = parse_int_strict(value, "stage burn-in");
    } else {
      throw std::invalid_argument("unknown stage key '" + key +
                                  "' (expected n-samples, lf-steps, epsilon, p-variance, burn-in)");
    }
  }
  return base;
}

// ----------------------------------------------------------------------
// Output files.
// ----------------------------------------------------------------------

std::vector<std::string> coord_header(const std::string& stem, Eigen::Index d) {
  std::vector<std::string> h;
  for (Eigen::Index j = 1; j <= d; ++j) h.push_back(stem + "_" + std::to_string(j));
  return h;
}

ordered_json json_finite(double v) {
  // nlohmann serialises non-finite numbers as null already; make the
  // intent explicit for the summary fields where NaN means "undefined"
  if (!std::isfinite(v)) return nullptr;
  return v;
}

void write_summary_json(const fs::path& path, const ordered_json& call,
                        const bayesel::ChainResult& chain, const bayesel::ChainSummary& s,
                        Eigen::Index retained) {
  ordered_json j;
  j["call"] = call;
  j["acceptance_rate"] = chain.acceptance_rate;
  j["retained_samples"] = retained;
  j["burn_in"] = s.burn_in;

  static const char* qnames[5] = {"2.5%", "25%", "50%", "75%", "97.5%"};
  ordered_json coords = ordered_json::array();
  for (Eigen::Index k = 0; k < s.mean.size(); ++k) {
    ordered_json c;
    c["name"] = "theta_" + std::to_string(k + 1);
    c["mean"] = s.mean[k];
    c["sd"] = s.sd[k];
    ordered_json q;
    for (int t = 0; t < 5; ++t) q[qnames[t]] = s.quantiles(k, t);
    c["quantiles"] = q;
    c["ess"] = json_finite(s.ess[k]);
    ordered_json acf = ordered_json::array();
    for (Eigen::Index l = 0; l < s.acf[static_cast<std::size_t>(k)].size(); ++l) {
      acf.push_back(s.acf[static_cast<std::size_t>(k)][l]);
    }
    c["acf"] = acf;
    coords.push_back(c);
  }
  j["coordinates"] = coords;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void write_chain_outputs(const fs::path& dir, const bayesel::ChainResult& chain, int burn_in,
                         const ordered_json& call) {
  fs::create_directories(dir);
  const Eigen::Index d = chain.samples.cols();
  const Eigen::Index retained = chain.samples.rows() - burn_in;

  bayesel::write_csv((dir / "samples.csv").string(), chain.samples.bottomRows(retained),
                     coord_header("theta", d));

  const auto summary = bayesel::summarize(chain, burn_in);
  write_summary_json(dir / "summary.json", call, chain, summary, retained);

  if (!chain.call.detailed) return;

  bayesel::write_csv((dir / "proposed.csv").string(), chain.proposed, coord_header("theta", d));

  Eigen::MatrixXd acc(static_cast<Eigen::Index>(chain.acceptance.size()), 1);
  for (std::size_t k = 0; k < chain.acceptance.size(); ++k) {
    acc(static_cast<Eigen::Index>(k), 0) = chain.acceptance[k] ? 1.0 : 0.0;
  }
  bayesel::write_csv((dir / "acceptance.csv").string(), acc, {"accepted"});

  const fs::path traj_dir = dir / "trajectories";
  fs::create_directories(traj_dir);
  char name[64];
  for (std::size_t k = 0; k < chain.trajectories.size(); ++k) {
    const auto& t = chain.trajectories[k];
    std::snprintf(name, sizeof(name), "update_%06zu_positions.csv", k + 1);
    bayesel::write_csv((traj_dir / name).string(), t.positions, coord_header("theta", d));
    std::snprintf(name, sizeof(name), "update_%06zu_momenta.csv", k + 1);
    bayesel::write_csv((traj_dir / name).string(), t.momenta, coord_header("p", d));
  }
}

// ----------------------------------------------------------------------
// Pipeline: one chain through its stages.  Earlier stages write into
// stage_i/ subdirectories; the final stage owns the chain root.
// ----------------------------------------------------------------------

ordered_json invocation_echo(const RunOptions& o) {
  ordered_json c;
  c["data"] = o.data_path;
  c["model"] = o.model_name;
  if (o.model_name == "logistic-constrained") c["rate"] = o.rate;
  c["prior"] = o.prior_spec;
  c["initial"] = o.initial;
  c["n-samples"] = o.n_samples;
  c["lf-steps"] = o.lf_steps;
  c["epsilon"] = o.epsilon;
  c["p-variance"] = o.p_variance;
  c["tol"] = o.tol;
  c["seed"] = o.seed;
  c["burn-in"] = o.burn_in;
  c["detailed"] = o.detailed;
  c["out"] = o.out_dir;
  c["chains"] = o.chains;
  c["stages"] = o.stages;
  return c;
}

struct PipelineOutcome {
  double final_acceptance_rate = 0.0;
  Eigen::VectorXd final_sample;
};

PipelineOutcome run_pipeline(const RunOptions& opts, const bayesel::EstimatingModel& model,
                             const bayesel::Prior& prior, const bayesel::Dataset& data,
                             const fs::path& chain_root, std::uint64_t chain_seed,
                             int chain_index) {
  StageSettings base;
  base.n_samples = opts.n_samples;
  base.lf_steps = opts.lf_steps;
  base.epsilon = opts.epsilon;
  base.p_variance = opts.p_variance;
  base.burn_in = opts.burn_in;

  std::vector<StageSettings> stages;
  if (opts.stages.empty()) {
    stages.push_back(base);
  } else {
    for (const auto& spec : opts.stages) stages.push_back(apply_stage_spec(base, spec));
  }
  const int n_stages = static_cast<int>(stages.size());

  bayesel::SolverSettings solver;
  solver.tol = opts.tol;

  PipelineOutcome outcome;
  Eigen::VectorXd initial = to_vector(opts.initial);
  for (int s = 0; s < n_stages; ++s) {
    const StageSettings& st = stages[s];
    if (st.burn_in < 0 || st.burn_in >= st.n_samples) {
      throw std::invalid_argument("burn-in must lie in [0, n-samples) (stage " +
                                  std::to_string(s + 1) + ")");
    }

    bayesel::HMCConfig hc;
    hc.n_samples = st.n_samples;
    hc.lf_steps = st.lf_steps;
    hc.epsilon = to_vector(st.epsilon);
    hc.p_variance = st.p_variance;
    hc.detailed = opts.detailed;
    hc.seed = n_stages > 1 ? bayesel::Rng::derive(chain_seed, static_cast<std::uint64_t>(s + 1))
                           : chain_seed;

    const auto chain = bayesel::run_chain(initial, model, prior, data, hc, solver);

    ordered_json call = invocation_echo(opts);
    call["n-samples"] = st.n_samples;
    call["lf-steps"] = st.lf_steps;
    call["epsilon"] = st.epsilon;
    call["p-variance"] = st.p_variance;
    call["burn-in"] = st.burn_in;
    if (n_stages > 1) {
      call["stage"] = s + 1;
      call["stage-seed"] = hc.seed;
      call["initial"] = std::vector<double>(initial.data(), initial.data() + initial.size());
    }
    if (chain_index > 0) {
      call["chain"] = chain_index;
      call["chain-seed"] = chain_seed;
    }

    const fs::path dir =
        s + 1 == n_stages ? chain_root : chain_root / ("stage_" + std::to_string(s + 1));
    write_chain_outputs(dir, chain, st.burn_in, call);

    initial = chain.samples.row(chain.samples.rows() - 1);  // warm start for the next stage
    outcome.final_acceptance_rate = chain.acceptance_rate;
    outcome.final_sample = initial;
  }
  return outcome;
}

int do_run(RunOptions opts) {
  if (opts.out_dir.empty()) {
    const char* env = std::getenv("BAYESEL_OUT_DIR");
    opts.out_dir = env && *env ? env : "bayesel_out";
  }
  if (opts.chains < 1) throw std::invalid_argument("--chains must be >= 1");
  if (opts.rate_given && opts.model_name != "logistic-constrained") {
    throw std::invalid_argument("--rate only applies to the logistic-constrained model");
  }

  const bayesel::Dataset data = bayesel::load_csv(opts.data_path);
  const bayesel::EstimatingModel model =
      opts.model_name == "mean" ? bayesel::mean_model(static_cast<int>(data.p()))
                                : bayesel::constrained_logistic_model(opts.rate);
  if (static_cast<int>(opts.initial.size()) != model.d) {
    throw std::invalid_argument("--initial has " + std::to_string(opts.initial.size()) +
                                " entries; the model needs " + std::to_string(model.d));
  }
  const bayesel::Prior prior = make_prior(opts.prior_spec, model.d);

  const fs::path root(opts.out_dir);
  fs::create_directories(root);

  if (opts.chains == 1) {
    run_pipeline(opts, model, prior, data, root, opts.seed, 0);
    std::cout << "wrote " << (root / "samples.csv").string() << "\n";
    return 0;
  }

  // independent chains, derived seeds, one directory each
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(opts.chains));
  std::vector<PipelineOutcome> outcomes(static_cast<std::size_t>(opts.chains));
  for (int j = 1; j <= opts.chains; ++j) {
    workers.emplace_back([&, j]() {
      try {
        outcomes[static_cast<std::size_t>(j - 1)] =
            run_pipeline(opts, model, prior, data, root / ("chain_" + std::to_string(j)),
                         bayesel::Rng::derive(opts.seed, static_cast<std::uint64_t>(j)), j);
      } catch (...) {
        errors[static_cast<std::size_t>(j - 1)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ordered_json top;
  top["call"] = invocation_echo(opts);
  ordered_json chain_list = ordered_json::array();
  for (int j = 1; j <= opts.chains; ++j) {
    ordered_json c;
    c["dir"] = "chain_" + std::to_string(j);
    c["seed"] = bayesel::Rng::derive(opts.seed, static_cast<std::uint64_t>(j));
    c["acceptance_rate"] = outcomes[static_cast<std::size_t>(j - 1)].final_acceptance_rate;
    chain_list.push_back(c);
  }
  top["chains"] = chain_list;
  std::ofstream out(root / "summary.json", std::ios::binary);
  out << top.dump(2) << '\n';
  std::cout << "wrote " << opts.chains << " chains under " << root.string() << "\n";
  return 0;
}

int do_gen(GenOptions g) {
  if (g.out_path.empty()) {
    const char* env = std::getenv("BAYESEL_OUT_DIR");
    const fs::path dir = env && *env ? env : "bayesel_out";
    fs::create_directories(dir);
    g.out_path = (dir / "synthetic_logistic.csv").string();
  } else if (fs::path(g.out_path).has_parent_path()) {
    fs::create_directories(fs::path(g.out_path).parent_path());
  }
  const auto data = bayesel::synthetic_fertility_data(g.n, Eigen::Vector2d(g.beta0, g.beta1),
                                                      g.x_rate, g.seed);
  bayesel::write_csv(g.out_path, data.rows, {"x", "y"});
  std::cout << "wrote " << g.out_path << " (" << data.n() << " rows, mean y = "
            << data.rows.col(1).mean() << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian empirical-likelihood posterior sampling with Hamiltonian Monte Carlo"};
  app.require_subcommand(1);

  RunOptions r;
  auto* run = app.add_subcommand("run", "Run HMC on an empirical-likelihood posterior");
  run->add_option("--data", r.data_path, "CSV file with one observation per row")->required();
  run->add_option("--model", r.model_name, "Estimating-function model")
      ->required()
      ->check(CLI::IsMember({"mean", "logistic-constrained"}));
  auto* rate_opt =
      run->add_option("--rate", r.rate, "Pinned response rate (logistic-constrained only)");
  run->add_option("--prior", r.prior_spec,
                  "Prior: 'flat' or 'normal:MEAN,VARIANCE' (';'-separated per-coordinate lists)")
      ->capture_default_str();
  run->add_option("--initial", r.initial, "Starting point, comma-separated")
      ->required()
      ->delimiter(',');
  run->add_option("--n-samples", r.n_samples, "Chain length including the starting point")
      ->capture_default_str();
  run->add_option("--lf-steps", r.lf_steps, "Leapfrog steps per update")->capture_default_str();
  run->add_option("--epsilon", r.epsilon,
                  "Leapfrog step size, scalar or one comma-separated value per coordinate")
      ->delimiter(',')
      ->capture_default_str();
  run->add_option("--p-variance", r.p_variance, "Momentum variance (mass)")
      ->capture_default_str();
  run->add_option("--tol", r.tol, "Inner solver residual tolerance")->capture_default_str();
  run->add_option("--seed", r.seed, "Random seed")->capture_default_str();
  run->add_option("--burn-in", r.burn_in, "Leading samples to drop from the outputs")
      ->capture_default_str();
  run->add_flag("--detailed", r.detailed,
                "Also write proposals, acceptance flags and leapfrog trajectories");
  run->add_option("--out", r.out_dir,
                  "Output directory (default: $BAYESEL_OUT_DIR, else ./bayesel_out)");
  run->add_option("--chains", r.chains, "Independent chains run concurrently with derived seeds")
      ->capture_default_str();
  run->add_option("--stages", r.stages,
                  "Stage override 'k=v,...' (keys: n-samples, lf-steps, epsilon, p-variance, "
                  "burn-in); repeat per stage; each stage starts from the previous final sample");

  GenOptions g;
  auto* gen = app.add_subcommand(
      "gen-logistic", "Generate synthetic binary (x, y) data for the logistic-constrained model");
  gen->add_option("--n", g.n, "Number of rows")->capture_default_str();
  gen->add_option("--beta0", g.beta0, "Intercept of the generating model")->capture_default_str();
  gen->add_option("--beta1", g.beta1, "Slope of the generating model")->capture_default_str();
  gen->add_option("--x-rate", g.x_rate, "P(x = 1)")->capture_default_str();
  gen->add_option("--seed", g.seed, "Random seed")->capture_default_str();
  gen->add_option("--out", g.out_path, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit cleanly; bad flags are config errors
  }
  r.rate_given = rate_opt->count() > 0;

  try {
    if (run->parsed()) return do_run(r);
    return do_gen(g);
  } catch (const bayesel::infeasible_initial_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const bayesel::csv_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
