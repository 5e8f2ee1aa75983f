#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "bayesel/dataset.hpp"
#include "bayesel/model.hpp"

namespace bayesel {

/// Stacked estimating-function values: row i = g(theta, x_i), shape n x q.
using GMatrix = Eigen::MatrixXd;

struct SolverSettings {
  double tol = 1e-8;        ///< constraint-residual tolerance
  int max_iter = 100;       ///< Newton iteration cap
  double lambda_cap = 1e10; ///< multiplier norm above which theta is declared infeasible
};

/// Result of the inner empirical-likelihood optimisation at a fixed theta.
///
/// When feasible, weights w_i = 1 / (n (1 + lambda' g_i)) lie strictly in
/// the simplex, sum(w_i g_i) vanishes to within the residual, and
/// log_el = sum_i log w_i.  When infeasible, log_el = -inf and weights are
/// empty.
struct ELSolution {
  bool feasible = false;
  Eigen::VectorXd weights;
  Eigen::VectorXd lambda;
  double log_el = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  double residual_norm = std::numeric_limits<double>::infinity();
};

namespace detail {

// Owen's pseudo-logarithm: log z above 1/n, quadratic extension below,
// matching value and first two derivatives at the junction.  Keeps the dual
// objective defined on all of R^q so the Newton iteration never has to
// guard its domain.
struct PseudoLog {
  double n;
  double cut;      // 1/n
  double log_cut;  // log(1/n)

  explicit PseudoLog(Eigen::Index n_) : n(static_cast<double>(n_)), cut(1.0 / n), log_cut(std::log(cut)) {}

  double value(double z) const {
    if (z >= cut) return std::log(z);
    const double nz = n * z;
    return log_cut - 1.5 + 2.0 * nz - 0.5 * nz * nz;
  }
  double d1(double z) const {
    if (z >= cut) return 1.0 / z;
    return 2.0 * n - n * n * z;
  }
  double d2(double z) const {
    if (z >= cut) return -1.0 / (z * z);
    return -n * n;
  }
};

}  // namespace detail

/// Solve for the Lagrange multiplier of the EL weight problem given the
/// stacked g values.
///
/// Minimises the convex dual f(lambda) = -sum_i log*(1 + lambda' g_i) by
/// damped Newton from lambda = 0 with step-halving on f.  The gradient of
/// f is minus the multiplier-equation residual, so convergence is declared
/// on ||grad f|| <= tol and then polished toward machine precision so the
/// weight identities hold far below tol.
///
/// theta is declared infeasible (the origin is not interior to the convex
/// hull of the g rows) when ||lambda|| exceeds lambda_cap, the iteration
/// cap is hit with residual above tol, or the converged weights leave the
/// interior of the simplex: a nonpositive weight, a weight at or above
/// one, or total mass away from one.  There is no separate hull test.
inline ELSolution solve_lambda(const GMatrix& G, const SolverSettings& settings = {}) {
  if (!G.allFinite()) throw std::invalid_argument("solve_lambda: non-finite entry in G");
  const Eigen::Index n = G.rows();
  const Eigen::Index q = G.cols();
  if (n < 1) throw std::invalid_argument("solve_lambda: empty G");

  const detail::PseudoLog plog(n);
  auto dual = [&](const Eigen::VectorXd& lambda) {
    const Eigen::VectorXd z = Eigen::VectorXd::Ones(n) + G * lambda;
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) f -= plog.value(z[i]);
    return f;
  };

  ELSolution sol;
  sol.lambda = Eigen::VectorXd::Zero(q);

  auto residual_at = [&](const Eigen::VectorXd& lambda, Eigen::VectorXd& z,
                         Eigen::VectorXd& grad) {
    z = Eigen::VectorXd::Ones(n) + G * lambda;
    Eigen::VectorXd d1(n);
    for (Eigen::Index i = 0; i < n; ++i) d1[i] = plog.d1(z[i]);
    grad = -(G.transpose() * d1);
    return grad.norm();
  };

  Eigen::VectorXd z(n), grad(q), step(q), d2neg(n);
  Eigen::VectorXd best_lambda = sol.lambda;
  double best_res = std::numeric_limits<double>::infinity();
  double f_cur = dual(sol.lambda);
  bool hit_cap = false;
  bool converged = false;
  int polish_left = -1;  // enabled once the tol target is met

  for (int iter = 0; iter < settings.max_iter + 6; ++iter) {
    const double res = residual_at(sol.lambda, z, grad);
    if (res < best_res) {
      best_res = res;
      best_lambda = sol.lambda;
    }
    if (res <= settings.tol && polish_left < 0) {
      converged = true;
      polish_left = 4;  // a few extra quadratic steps; cheap, tightens identities
    }
    if (polish_left == 0 || res == 0.0) break;
    if (polish_left < 0 && iter >= settings.max_iter) break;

    for (Eigen::Index i = 0; i < n; ++i) d2neg[i] = -plog.d2(z[i]);
    Eigen::MatrixXd hess = G.transpose() * d2neg.asDiagonal() * G;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    step = ldlt.solve(-grad);
    const bool bad_solve = ldlt.info() != Eigen::Success || !step.allFinite() ||
                           (hess * step + grad).norm() > 1e-6 * (res + 1.0);
    if (bad_solve) {
      const double reg = 1e-10 * (hess.trace() / static_cast<double>(q)) +
                         std::numeric_limits<double>::min();
      hess.diagonal().array() += reg;
      step = Eigen::LDLT<Eigen::MatrixXd>(hess).solve(-grad);
      if (!step.allFinite()) break;
    }

    // step-halving line search: require dual decrease, or — once f is flat
    // to rounding in the quadratic basin — strict residual progress, so the
    // polish steps can keep tightening past the floating-point floor of f
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd z_try(n), grad_try(q);
    for (int halvings = 0; halvings < 60; ++halvings) {
      const Eigen::VectorXd cand = sol.lambda + t * step;
      const double f_new = dual(cand);
      const bool flat = f_new <= f_cur + 1e-12 * (std::abs(f_cur) + 1.0);
      if (f_new < f_cur ||
          (flat && residual_at(cand, z_try, grad_try) < 0.9 * res)) {
        sol.lambda = cand;
        f_cur = f_new;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // numerical floor or stagnation
    ++sol.iterations;
    if (polish_left > 0) --polish_left;

    if (sol.lambda.norm() > settings.lambda_cap) {
      hit_cap = true;
      break;
    }
  }

  sol.lambda = best_lambda;
  sol.residual_norm = residual_at(sol.lambda, z, grad);
  if (hit_cap || !converged) return sol;  // infeasible: log_el = -inf

  if ((z.array() <= 0.0).any()) return sol;  // a converged weight would be <= 0

  // At a genuine interior optimum every weight lies strictly below 1
  // (n z_i > 1, so the pseudo-log never bent the objective) and the
  // multiplier equation forces the weights to sum to one exactly.  A small
  // residual alone does not imply either: on infeasible instances the
  // residual also vanishes along rays ||lambda|| -> inf, where the weights
  // collapse toward zero total mass.  Enforce both identities.
  const Eigen::ArrayXd nz = static_cast<double>(n) * z.array();
  if (nz.minCoeff() < 1.0 - 1e-7) return sol;

  sol.weights = nz.inverse().matrix();
  if (!sol.weights.allFinite() || std::abs(sol.weights.sum() - 1.0) > 1e-6) {
    sol.weights.resize(0);
    return sol;
  }
  sol.feasible = true;
  sol.log_el = -nz.log().sum();
  return sol;
}

/// Stack g(theta, x_i) over the data: row i of the result is g(theta, x_i).
inline GMatrix evaluate_g(const EstimatingModel& model, const Eigen::VectorXd& theta,
                          const Dataset& data) {
  if (!theta.allFinite()) throw std::invalid_argument("evaluate_g: non-finite theta");
  if (theta.size() != model.d) {
    throw std::invalid_argument("evaluate_g: theta has dimension " +
                                std::to_string(theta.size()) + ", model declares d = " +
                                std::to_string(model.d));
  }
  GMatrix G(data.n(), model.q);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Eigen::VectorXd gi = model.g(theta, data.row(i));
    if (gi.size() != model.q) {
      throw std::invalid_argument("evaluate_g: g returned " + std::to_string(gi.size()) +
                                  " values, model declares q = " + std::to_string(model.q));
    }
    if (!gi.allFinite()) {
      throw std::invalid_argument("evaluate_g: non-finite g value at row " + std::to_string(i));
    }
    G.row(i) = gi.transpose();
  }
  return G;
}

/// Log empirical likelihood at theta: sum_i log w_i when the weight
/// problem is feasible, -inf otherwise (the L(theta) := 0 convention).
/// The value is un-normalised; its maximum over theta is -n log n.
inline ELSolution log_el(const EstimatingModel& model, const Eigen::VectorXd& theta,
                         const Dataset& data, const SolverSettings& settings = {}) {
  return solve_lambda(evaluate_g(model, theta, data), settings);
}

/// Analytic gradient of the log empirical likelihood:
///   -n sum_i w_i lambda' grad_g(theta, x_i).
/// Only the multiplier value enters; its own derivative is never needed.
inline Eigen::VectorXd grad_log_el(const EstimatingModel& model, const Eigen::VectorXd& theta,
                                   const Dataset& data, const ELSolution& solution) {
  if (!solution.feasible) {
    throw std::logic_error("grad_log_el: called with an infeasible solution");
  }
  const double n = static_cast<double>(data.n());
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(model.d);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    acc += solution.weights[i] * (solution.lambda.transpose() * model.grad_g(theta, data.row(i)));
  }
  return -n * acc.transpose();
}

}  // namespace bayesel
