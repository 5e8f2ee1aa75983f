#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Core>

#include "bayesel/dataset.hpp"
#include "bayesel/el.hpp"
#include "bayesel/prior.hpp"

namespace bayesel {

/// Potential energy U(theta) = -(log EL + log prior) and its gradient.
/// Infeasible theta (outside the EL support or the prior support) carries
/// potential +inf and an empty gradient.  The posterior normaliser is
/// never computed; U is defined up to that additive constant.
struct PosteriorEval {
  bool feasible = false;
  double potential = std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad_potential;
  ELSolution el;
};

inline PosteriorEval evaluate_potential(const EstimatingModel& model, const Prior& prior,
                                        const Eigen::VectorXd& theta, const Dataset& data,
                                        const SolverSettings& settings = {}) {
  if (!theta.allFinite()) throw std::invalid_argument("evaluate_potential: non-finite theta");
  PosteriorEval out;
  const double lp = prior.log_density(theta);
  if (std::isnan(lp)) throw std::domain_error("evaluate_potential: prior log-density is NaN");
  if (std::isinf(lp) && lp < 0.0) return out;  // outside prior support

  out.el = log_el(model, theta, data, settings);
  if (!out.el.feasible) return out;

  out.feasible = true;
  out.potential = -(out.el.log_el + lp);
  out.grad_potential = -(grad_log_el(model, theta, data, out.el) + prior.grad_log_density(theta));
  if (!std::isfinite(out.potential) || !out.grad_potential.allFinite()) {
    out = PosteriorEval{};
    out.el.feasible = false;
    out.el.log_el = -std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace bayesel
