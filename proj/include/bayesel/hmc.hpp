#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bayesel/posterior.hpp"
#include "bayesel/rng.hpp"

namespace bayesel {

/// Thrown by run_chain when the starting point is outside the posterior
/// support.  The message tells the user to restart from a feasible point.
class infeasible_initial_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sampler configuration.  epsilon may hold one entry (shared step size)
/// or d entries (per-coordinate step sizes).  The mass matrix is
/// p_variance times the identity; momenta are drawn N(0, p_variance I).
struct HMCConfig {
  int n_samples = 0;
  int lf_steps = 0;
  Eigen::VectorXd epsilon;
  double p_variance = 1.0;
  std::uint64_t seed = 0;
  bool detailed = false;
};

struct PhasePoint {
  Eigen::VectorXd theta;
  Eigen::VectorXd p;
};

/// Position/momentum record of one leapfrog trajectory, one row per step
/// point.  Completed trajectories have lf_steps + 1 rows; aborted ones are
/// truncated at the point that left the support.
struct Trajectory {
  Eigen::MatrixXd positions;
  Eigen::MatrixXd momenta;
  bool aborted = false;
};

/// Everything a chain run returns.  samples row 0 is the initial value;
/// rows k+1 = proposed row k when acceptance[k], else samples row k.
struct ChainResult {
  Eigen::MatrixXd samples;
  double acceptance_rate = 0.0;
  Eigen::MatrixXd proposed;
  std::vector<bool> acceptance;
  std::vector<Trajectory> trajectories;  // filled only when detailed
  HMCConfig call;
};

using PotentialFn = std::function<PosteriorEval(const Eigen::VectorXd&)>;

/// K(p) = 0.5 p' M^-1 p for M = p_variance * I.
inline double kinetic_energy(const Eigen::VectorXd& p, double p_variance) {
  return 0.5 * p.squaredNorm() / p_variance;
}

struct LeapfrogResult {
  bool aborted = false;
  PhasePoint end;
  PosteriorEval end_eval;  // valid when not aborted
  Trajectory trajectory;   // recorded only when requested
};

namespace detail {

inline Eigen::MatrixXd rows_to_matrix(const std::vector<Eigen::VectorXd>& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
  return m;
}

}  // namespace detail

/// Leapfrog integration of Hamilton's equations for lf_steps steps:
/// half-step momentum, full-step position, half-step momentum, with the
/// interior half-steps fused.  Aborts (a value, not an error) as soon as a
/// position falls outside the support or anything overflows; the caller
/// treats an aborted trajectory as a rejected proposal.
///
/// start_eval may pass a cached evaluation of the potential at the start.
inline LeapfrogResult leapfrog(const PhasePoint& start, const PotentialFn& potential,
                               const Eigen::VectorXd& epsilon, int lf_steps,
                               double p_variance = 1.0, bool record = false,
                               const std::optional<PosteriorEval>& start_eval = std::nullopt) {
  const Eigen::Index d = start.theta.size();
  if (epsilon.size() != d && epsilon.size() != 1) {
    throw std::invalid_argument("leapfrog: epsilon must be scalar or match the state dimension");
  }
  const Eigen::VectorXd eps =
      epsilon.size() == d ? epsilon : Eigen::VectorXd::Constant(d, epsilon[0]);

  LeapfrogResult out;
  std::vector<Eigen::VectorXd> qs, ps;

  PosteriorEval eval = start_eval ? *start_eval : potential(start.theta);
  if (!eval.feasible || !eval.grad_potential.allFinite()) {
    out.aborted = true;
    out.end = start;
    out.trajectory.aborted = true;
    return out;
  }
  if (record) {
    qs.push_back(start.theta);
    ps.push_back(start.p);
  }

  const Eigen::VectorXd half = 0.5 * eps;
  Eigen::VectorXd theta = start.theta;
  Eigen::VectorXd p = start.p - half.cwiseProduct(eval.grad_potential);

  for (int step = 1; step <= lf_steps; ++step) {
    theta += eps.cwiseProduct(p) / p_variance;
    if (!theta.allFinite()) {
      out.aborted = true;
      break;
    }
    eval = potential(theta);
    if (!eval.feasible || !eval.grad_potential.allFinite()) {
      out.aborted = true;
      out.end.theta = theta;  // where the trajectory left the support
      break;
    }
    if (step < lf_steps) {
      if (record) {
        qs.push_back(theta);
        ps.push_back(p - half.cwiseProduct(eval.grad_potential));
      }
      p -= eps.cwiseProduct(eval.grad_potential);
    } else {
      p -= half.cwiseProduct(eval.grad_potential);
      if (record) {
        qs.push_back(theta);
        ps.push_back(p);
      }
    }
  }

  if (!out.aborted) {
    out.end = PhasePoint{theta, p};
    out.end_eval = eval;
  }
  if (record) {
    out.trajectory.positions = detail::rows_to_matrix(qs);
    out.trajectory.momenta = detail::rows_to_matrix(ps);
    out.trajectory.aborted = out.aborted;
  }
  return out;
}

struct UpdateResult {
  Eigen::VectorXd next;
  PosteriorEval next_eval;
  Eigen::VectorXd proposed;
  bool accepted = false;
  Trajectory trajectory;
};

/// One Hamiltonian Monte Carlo update: momentum refresh, leapfrog
/// trajectory, momentum negation (symmetry of the proposal; no effect on
/// the kinetic energy), Metropolis accept/reject with one uniform draw.
/// Aborted trajectories are rejected outright.
inline UpdateResult hmc_update(const Eigen::VectorXd& current, const PosteriorEval& current_eval,
                               const PotentialFn& potential, const Eigen::VectorXd& epsilon,
                               int lf_steps, double p_variance, bool record, Rng& rng) {
  UpdateResult out;
  const Eigen::VectorXd p0 = rng.normal_vector(current.size(), std::sqrt(p_variance));
  const double h_current = current_eval.potential + kinetic_energy(p0, p_variance);

  LeapfrogResult lf = leapfrog(PhasePoint{current, p0}, potential, epsilon, lf_steps,
                               p_variance, record, current_eval);
  out.trajectory = std::move(lf.trajectory);

  if (lf.aborted) {
    out.accepted = false;
    out.next = current;
    out.next_eval = current_eval;
    out.proposed = lf.end.theta.size() ? lf.end.theta : current;
    return out;
  }

  const Eigen::VectorXd p_star = -lf.end.p;
  const double h_proposed = lf.end_eval.potential + kinetic_energy(p_star, p_variance);
  out.proposed = lf.end.theta;
  out.accepted = rng.uniform() < std::exp(h_current - h_proposed);
  if (out.accepted) {
    out.next = lf.end.theta;
    out.next_eval = lf.end_eval;
  } else {
    out.next = current;
    out.next_eval = current_eval;
  }
  return out;
}

namespace detail {

inline void validate_config(const HMCConfig& config, Eigen::Index d) {
  if (config.n_samples < 2) throw std::invalid_argument("HMCConfig: n_samples must be >= 2");
  if (config.lf_steps < 1) throw std::invalid_argument("HMCConfig: lf_steps must be >= 1");
  if (config.epsilon.size() != 1 && config.epsilon.size() != d) {
    throw std::invalid_argument("HMCConfig: epsilon must be a scalar or match the parameter dimension");
  }
  if (!(config.epsilon.array() > 0.0).all()) {
    throw std::invalid_argument("HMCConfig: epsilon must be positive componentwise");
  }
  if (!(config.p_variance > 0.0)) throw std::invalid_argument("HMCConfig: p_variance must be positive");
}

}  // namespace detail

/// Run one HMC chain of n_samples rows (row 0 = initial value, then
/// n_samples - 1 updates).  Deterministic given config.seed.  Requires a
/// feasible starting point.
inline ChainResult run_chain(const Eigen::VectorXd& initial, const EstimatingModel& model,
                             const Prior& prior, const Dataset& data, const HMCConfig& config,
                             const SolverSettings& settings = {}) {
  const Eigen::Index d = initial.size();
  detail::validate_config(config, d);
  if (model.d != d) {
    throw std::invalid_argument("run_chain: initial dimension does not match the model");
  }

  const Eigen::VectorXd epsilon = config.epsilon.size() == d
                                      ? config.epsilon
                                      : Eigen::VectorXd::Constant(d, config.epsilon[0]);
  PotentialFn potential = [&](const Eigen::VectorXd& theta) {
    return evaluate_potential(model, prior, theta, data, settings);
  };

  PosteriorEval current_eval = potential(initial);
  if (!current_eval.feasible) {
    std::string hint = "run_chain: the initial value is outside the posterior support; "
                       "pick a starting point inside it";
    if (model.name == "mean") hint += " (for the mean model, near the sample mean)";
    throw infeasible_initial_error(hint);
  }

  ChainResult result;
  result.call = config;
  const int updates = config.n_samples - 1;
  result.samples.resize(config.n_samples, d);
  result.proposed.resize(updates, d);
  result.acceptance.reserve(updates);
  if (config.detailed) result.trajectories.reserve(updates);

  Rng rng(config.seed);
  Eigen::VectorXd current = initial;
  result.samples.row(0) = current;

  int accepted = 0;
  for (int k = 0; k < updates; ++k) {
    UpdateResult u = hmc_update(current, current_eval, potential, epsilon, config.lf_steps,
                                config.p_variance, config.detailed, rng);
    current = u.next;
    current_eval = u.next_eval;
    result.samples.row(k + 1) = current;
    result.proposed.row(k) = u.proposed;
    result.acceptance.push_back(u.accepted);
    if (u.accepted) ++accepted;
    if (config.detailed) result.trajectories.push_back(std::move(u.trajectory));
  }
  result.acceptance_rate = updates > 0 ? static_cast<double>(accepted) / updates : 0.0;
  return result;
}

}  // namespace bayesel
