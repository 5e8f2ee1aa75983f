#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace bayesel {

/// A prior over the parameter space, supplied as a joint log-density and
/// its gradient.  Log form is taken at this boundary on purpose: the
/// Metropolis ratio and the potential only ever need log-differences, so
/// additive constants in log_density may be (and in the built-ins are)
/// dropped.
struct Prior {
  std::string name;
  std::function<double(const Eigen::VectorXd&)> log_density;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_log_density;
};

/// Improper flat prior: log-density identically zero.
inline Prior flat_prior() {
  Prior p;
  p.name = "flat";
  p.log_density = [](const Eigen::VectorXd&) { return 0.0; };
  p.grad_log_density = [](const Eigen::VectorXd& theta) {
    return Eigen::VectorXd(Eigen::VectorXd::Zero(theta.size()));
  };
  return p;
}

/// Independent normal prior with per-coordinate means and variances.
/// The -0.5 log(2 pi v) constant is dropped.
inline Prior normal_prior(Eigen::VectorXd mean, Eigen::VectorXd variance) {
  if (mean.size() != variance.size()) {
    throw std::invalid_argument("normal_prior: mean/variance dimension mismatch");
  }
  if ((variance.array() <= 0.0).any()) {
    throw std::invalid_argument("normal_prior: variances must be positive");
  }
  Prior p;
  p.name = "normal";
  p.log_density = [mean, variance](const Eigen::VectorXd& theta) {
    if (theta.size() != mean.size()) {
      throw std::invalid_argument("normal_prior: theta dimension mismatch");
    }
    return -0.5 * ((theta - mean).array().square() / variance.array()).sum();
  };
  p.grad_log_density = [mean, variance](const Eigen::VectorXd& theta) {
    return Eigen::VectorXd(-((theta - mean).array() / variance.array()).matrix());
  };
  return p;
}

/// Shared scalar mean/variance across d coordinates.
inline Prior normal_prior(double mean, double variance, int d) {
  return normal_prior(Eigen::VectorXd::Constant(d, mean),
                      Eigen::VectorXd::Constant(d, variance));
}

}  // namespace bayesel
