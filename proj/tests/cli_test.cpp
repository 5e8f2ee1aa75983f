// Black-box tests of the command-line binary: output layout, the
// round-trip and audit properties of samples.csv / summary.json, and the
// exit-code contract.  The binary path arrives in BAYESEL_CLI (ctest
// sets it); the cases skip when it is absent.

#include <sys/wait.h>

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bayesel/bayesel.hpp"
#include "support/test_util.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("BAYESEL_CLI");
  return p ? p : "";
}

int run_command(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& leaf) : path(fs::temp_directory_path() / leaf) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("samples round-trip and summary audit", "[cli]") {
  const std::string cli = cli_path();
  if (cli.empty()) SKIP("BAYESEL_CLI not set");

  TempDir tmp("bayesel_cli_roundtrip");
  bayesel::write_csv((tmp.path / "data.csv").string(), testutil::square_data().rows, {"x1", "x2"});

  const fs::path out = tmp.path / "out";
  const std::string cmd = q(cli) + " run --data " + q(tmp.path / "data.csv") +
                          " --model mean --prior normal:0.5,2 --initial 0.2,0.1" +
                          " --n-samples 120 --lf-steps 7 --epsilon 0.04,0.05 --p-variance 1.5" +
                          " --tol 1e-9 --seed 42 --burn-in 20 --out " + q(out);
  REQUIRE(run_command(cmd) == 0);

  // round-trip: retained rows = n_samples - burn_in, one column per coordinate
  const auto samples = bayesel::load_csv((out / "samples.csv").string());
  CHECK(samples.n() == 100);
  CHECK(samples.p() == 2);

  std::ifstream in(out / "summary.json");
  REQUIRE(in.good());
  const auto j = nlohmann::json::parse(in);
  const auto& call = j.at("call");
  CHECK(call.at("data").get<std::string>() == (tmp.path / "data.csv").string());
  CHECK(call.at("model").get<std::string>() == "mean");
  CHECK(call.at("prior").get<std::string>() == "normal:0.5,2");
  CHECK(call.at("initial").get<std::vector<double>>() == std::vector<double>{0.2, 0.1});
  CHECK(call.at("n-samples").get<int>() == 120);
  CHECK(call.at("lf-steps").get<int>() == 7);
  CHECK(call.at("epsilon").get<std::vector<double>>() == std::vector<double>{0.04, 0.05});
  CHECK(call.at("p-variance").get<double>() == 1.5);
  CHECK(call.at("tol").get<double>() == 1e-9);
  CHECK(call.at("seed").get<std::uint64_t>() == 42);
  CHECK(call.at("burn-in").get<int>() == 20);
  CHECK(call.at("detailed").get<bool>() == false);
  CHECK(call.at("out").get<std::string>() == out.string());
  CHECK(call.at("chains").get<int>() == 1);
  CHECK(call.at("stages").get<std::vector<std::string>>().empty());

  CHECK(j.at("retained_samples").get<int>() == 100);
  CHECK(j.at("acceptance_rate").get<double>() >= 0.0);
  CHECK(j.at("coordinates").size() == 2);
}

TEST_CASE("octagon chain stays inside the data square", "[cli]") {
  const std::string cli = cli_path();
  if (cli.empty()) SKIP("BAYESEL_CLI not set");

  TempDir tmp("bayesel_cli_octagon");
  bayesel::write_csv((tmp.path / "data.csv").string(), testutil::square_data().rows, {"x1", "x2"});

  const fs::path out = tmp.path / "out";
  const std::string cmd = q(cli) + " run --data " + q(tmp.path / "data.csv") +
                          " --model mean --prior normal:0,1 --initial 0.9,0.95" +
                          " --n-samples 1000 --lf-steps 15 --epsilon 0.06 --seed 3 --out " +
                          q(out);
  REQUIRE(run_command(cmd) == 0);

  const auto samples = bayesel::load_csv((out / "samples.csv").string());
  REQUIRE(samples.n() == 1000);
  CHECK((samples.rows.array().abs() < 1.0).all());

  std::ifstream in(out / "summary.json");
  const auto j = nlohmann::json::parse(in);
  const double acc = j.at("acceptance_rate").get<double>();
  CHECK(acc > 0.5);
  CHECK(acc <= 1.0);
}

TEST_CASE("detailed outputs have the documented shapes", "[cli]") {
  const std::string cli = cli_path();
  if (cli.empty()) SKIP("BAYESEL_CLI not set");

  TempDir tmp("bayesel_cli_detailed");
  bayesel::write_csv((tmp.path / "data.csv").string(), testutil::square_data().rows, {"x1", "x2"});

  const fs::path out = tmp.path / "out";
  const std::string cmd = q(cli) + " run --data " + q(tmp.path / "data.csv") +
                          " --model mean --initial 0.1,0.0 --n-samples 25 --lf-steps 6" +
                          " --epsilon 0.05 --seed 9 --detailed --out " + q(out);
  REQUIRE(run_command(cmd) == 0);

  CHECK(bayesel::load_csv((out / "proposed.csv").string()).n() == 24);
  CHECK(bayesel::load_csv((out / "acceptance.csv").string()).n() == 24);
  int n_traj = 0;
  for (const auto& e : fs::directory_iterator(out / "trajectories")) {
    (void)e;
    ++n_traj;
  }
  CHECK(n_traj == 2 * 24);  // positions and momenta per update
  const auto t1 = bayesel::load_csv((out / "trajectories" / "update_000001_positions.csv").string());
  CHECK(t1.n() == 7);  // lf_steps + 1 recorded points
  CHECK(t1.p() == 2);
}

TEST_CASE("exit codes distinguish config, start, and data errors", "[cli]") {
  const std::string cli = cli_path();
  if (cli.empty()) SKIP("BAYESEL_CLI not set");

  TempDir tmp("bayesel_cli_exits");
  bayesel::write_csv((tmp.path / "data.csv").string(), testutil::square_data().rows, {"x1", "x2"});
  {
    std::ofstream bad(tmp.path / "bad.csv");
    bad << "a,b\n1,oops\n";
  }
  const std::string base = q(cli) + " run --data " + q(tmp.path / "data.csv") +
                           " --model mean --out " + q(tmp.path / "out");

  CHECK(run_command(q(cli) + " --help") == 0);
  CHECK(run_command(q(cli)) == 2);  // missing subcommand
  CHECK(run_command(base + " --initial 0,0 --no-such-flag 1") == 2);
  CHECK(run_command(base + " --initial 0,0 --rate 0.5") == 2);  // rate without logistic
  CHECK(run_command(base + " --initial 0,0 --n-samples 10 --burn-in 10") == 2);
  CHECK(run_command(base + " --initial 0,0 --prior bogus") == 2);
  CHECK(run_command(base + " --initial 2,0") == 3);  // outside the support
  CHECK(run_command(q(cli) + " run --data " + q(tmp.path / "missing.csv") +
                    " --model mean --initial 0,0 --out " + q(tmp.path / "out")) == 4);
  CHECK(run_command(q(cli) + " run --data " + q(tmp.path / "bad.csv") +
                    " --model mean --initial 0,0 --out " + q(tmp.path / "out")) == 4);
}

TEST_CASE("chain fan-out writes per-chain directories with derived seeds", "[cli]") {
  const std::string cli = cli_path();
  if (cli.empty()) SKIP("BAYESEL_CLI not set");

  TempDir tmp("bayesel_cli_chains");
  bayesel::write_csv((tmp.path / "data.csv").string(), testutil::square_data().rows, {"x1", "x2"});

  const fs::path out = tmp.path / "out";
  const std::string cmd = q(cli) + " run --data " + q(tmp.path / "data.csv") +
                          " --model mean --initial 0.2,0.1 --n-samples 40 --lf-steps 5" +
                          " --epsilon 0.06 --seed 5 --chains 2 --out " + q(out);
  REQUIRE(run_command(cmd) == 0);

  const auto c1 = bayesel::load_csv((out / "chain_1" / "samples.csv").string());
  const auto c2 = bayesel::load_csv((out / "chain_2" / "samples.csv").string());
  REQUIRE(c1.n() == 40);
  REQUIRE(c2.n() == 40);
  CHECK((c1.rows - c2.rows).norm() > 0.0);  // distinct streams

  std::ifstream in(out / "summary.json");
  const auto j = nlohmann::json::parse(in);
  REQUIRE(j.at("chains").size() == 2);
  CHECK(j.at("chains")[0].at("seed").get<std::uint64_t>() == bayesel::Rng::derive(5, 1));
  CHECK(j.at("chains")[1].at("seed").get<std::uint64_t>() == bayesel::Rng::derive(5, 2));
}
