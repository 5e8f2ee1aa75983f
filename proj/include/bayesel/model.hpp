#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "bayesel/dataset.hpp"
#include "bayesel/rng.hpp"

namespace bayesel {

/// An estimating-function model: g(theta, x) is a q-vector with zero
/// expectation at the true parameter, grad_g its q x d Jacobian with
/// entry (j, k) = d g_j / d theta_k.
///
/// The divergence theory behind the sampler assumes q <= d, n > q, full
/// row rank of the stacked g matrix and of weighted Jacobian averages.
/// None of this is enforced here: the constrained-logistic model below has
/// q = 3 > d = 2 and still samples fine.  Jacobians are never computed
/// numerically on the model's behalf; use validate_jacobian to check a
/// hand-coded one.
struct EstimatingModel {
  std::string name;
  int d = 0;
  int q = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> g;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> grad_g;
};

/// Overflow-safe logistic function (sign-split form).
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Mean of p-variate data: g(theta, x) = theta - x, Jacobian the identity.
inline EstimatingModel mean_model(int p) {
  if (p < 1) throw std::invalid_argument("mean_model: dimension must be >= 1");
  EstimatingModel m;
  m.name = "mean";
  m.d = p;
  m.q = p;
  m.g = [](const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(theta - x);
  };
  m.grad_g = [p](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Identity(p, p));
  };
  return m;
}

/// Logistic regression of a binary y on a binary x with the population
/// rate of y pinned to `rate`.  Rows are (x, y); beta = (intercept, slope).
///
/// With a = sigmoid(b0 + b1 x):
///   g = (y - a, x (y - a), y - rate)
/// and the Jacobian rows are (-a(1-a), -a(1-a)x), (-a(1-a)x, -a(1-a)x^2),
/// (0, 0).
inline EstimatingModel constrained_logistic_model(double rate = 0.06179) {
  if (!(rate > 0.0 && rate < 1.0)) {
    throw std::invalid_argument("constrained_logistic_model: rate must be in (0,1)");
  }
  EstimatingModel m;
  m.name = "logistic-constrained";
  m.d = 2;
  m.q = 3;
  m.g = [rate](const Eigen::VectorXd& beta, const Eigen::VectorXd& row) {
    const double x = row[0], y = row[1];
    const double a = sigmoid(beta[0] + beta[1] * x);
    Eigen::VectorXd out(3);
    out << y - a, x * (y - a), y - rate;
    return out;
  };
  m.grad_g = [](const Eigen::VectorXd& beta, const Eigen::VectorXd& row) {
    const double x = row[0];
    const double a = sigmoid(beta[0] + beta[1] * x);
    const double s = -a * (1.0 - a);
    Eigen::MatrixXd out(3, 2);
    out << s, s * x,
           s * x, s * x * x,
           0.0, 0.0;
    return out;
  };
  return m;
}

/// Synthetic two-column (x, y) data for the constrained-logistic model:
/// x ~ Bernoulli(x_rate), y | x ~ Bernoulli(sigmoid(b0 + b1 x)).
/// Deterministic given the seed.
inline Dataset synthetic_fertility_data(int n, const Eigen::Vector2d& beta,
                                        double x_rate, std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("synthetic_fertility_data: n must be >= 10");
  if (!(x_rate > 0.0 && x_rate < 1.0)) {
    throw std::invalid_argument("synthetic_fertility_data: x_rate must be in (0,1)");
  }
  Rng rng(seed);
  Eigen::MatrixXd rows(n, 2);
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform() < x_rate ? 1.0 : 0.0;
    const double py = sigmoid(beta[0] + beta[1] * x);
    const double y = rng.uniform() < py ? 1.0 : 0.0;
    rows(i, 0) = x;
    rows(i, 1) = y;
  }
  return Dataset(std::move(rows));
}

/// Compare a model's hand-coded Jacobian against central finite differences
/// of g at (theta, x).  Returns the worst entry-wise mismatch relative to
/// max(1, |J|).  No numeric fallback is wired into evaluation; this is an
/// on-demand check for user-supplied models.
inline double validate_jacobian(const EstimatingModel& model,
                                const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& x, double step = 1e-6) {
  const Eigen::MatrixXd analytic = model.grad_g(theta, x);
  double worst = 0.0;
  for (int k = 0; k < model.d; ++k) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp[k] += step;
    tm[k] -= step;
    const Eigen::VectorXd fd = (model.g(tp, x) - model.g(tm, x)) / (2.0 * step);
    for (int j = 0; j < model.q; ++j) {
      const double denom = std::max(1.0, std::abs(analytic(j, k)));
      worst = std::max(worst, std::abs(fd[j] - analytic(j, k)) / denom);
    }
  }
  return worst;
}

}  // namespace bayesel
