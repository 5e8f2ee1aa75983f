#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "bayesel/posterior.hpp"
#include "bayesel/prior.hpp"
#include "bayesel/rng.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using bayesel::Prior;
using bayesel::Rng;
using Eigen::VectorXd;

namespace {

VectorXd theta2(double a, double b) {
  VectorXd t(2);
  t << a, b;
  return t;
}

}  // namespace

TEST_CASE("flat prior contributes nothing; normal prior matches its formula", "[posterior]") {
  const auto flat = bayesel::flat_prior();
  const VectorXd t = theta2(0.7, -1.3);
  CHECK(flat.log_density(t) == 0.0);
  CHECK(flat.grad_log_density(t).isZero());
  CHECK(flat.grad_log_density(t).size() == 2);

  VectorXd mean(2), var(2);
  mean << 1.0, -2.0;
  var << 4.0, 0.25;
  const auto np = bayesel::normal_prior(mean, var);

  // additive constants are dropped, so compare log-density differences
  const VectorXd u = theta2(0.2, 0.1);
  auto exact = [&](const VectorXd& x) {
    return -0.5 * ((x - mean).array().square() / var.array()).sum();
  };
  CHECK(np.log_density(t) - np.log_density(u) ==
        Catch::Approx(exact(t) - exact(u)).margin(1e-14));
  CHECK(np.grad_log_density(t).isApprox(VectorXd(-((t - mean).array() / var.array()).matrix()), 1e-14));

  const auto scalar = bayesel::normal_prior(0.0, 1.0, 2);
  CHECK(scalar.log_density(t) == Catch::Approx(-0.5 * t.squaredNorm()).margin(1e-14));
  CHECK(scalar.grad_log_density(t).isApprox(VectorXd(-t), 1e-14));

  VectorXd bad_var(2);
  bad_var << 1.0, 0.0;
  CHECK_THROWS_AS(bayesel::normal_prior(mean, bad_var), std::invalid_argument);
  CHECK_THROWS_AS(bayesel::normal_prior(VectorXd::Zero(3), var), std::invalid_argument);
}

TEST_CASE("potential at the center of the square equals the known maximum", "[posterior]") {
  const auto data = testutil::square_data();
  const auto model = bayesel::mean_model(2);

  const auto flat_eval =
      bayesel::evaluate_potential(model, bayesel::flat_prior(), theta2(0, 0), data);
  REQUIRE(flat_eval.feasible);
  CHECK(flat_eval.potential == Catch::Approx(8.0 * std::log(8.0)).margin(1e-10));
  CHECK(flat_eval.grad_potential.norm() < 1e-8);

  // a standard normal prior adds 0.5 ||theta||^2 and theta to U and its grad
  const VectorXd t = theta2(0.3, -0.2);
  const auto flat_t = bayesel::evaluate_potential(model, bayesel::flat_prior(), t, data);
  const auto norm_t =
      bayesel::evaluate_potential(model, bayesel::normal_prior(0.0, 1.0, 2), t, data);
  REQUIRE(flat_t.feasible);
  REQUIRE(norm_t.feasible);
  CHECK(norm_t.potential - flat_t.potential ==
        Catch::Approx(0.5 * t.squaredNorm()).margin(1e-12));
  CHECK((norm_t.grad_potential - flat_t.grad_potential).isApprox(t, 1e-10));
}

TEST_CASE("gradient of the potential matches finite differences", "[posterior]") {
  Rng rng(55);
  const auto data = testutil::random_data(rng, 30, 2);
  const auto model = bayesel::mean_model(2);
  const auto prior = bayesel::normal_prior(0.0, 2.5, 2);

  for (int rep = 0; rep < 15; ++rep) {
    const VectorXd theta =
        testutil::random_feasible_theta(rng, model, data, data.column_means(), 0.15);
    const auto eval = bayesel::evaluate_potential(model, prior, theta, data);
    REQUIRE(eval.feasible);
    const VectorXd fd = oracle::central_difference(
        [&](const VectorXd& t) {
          return bayesel::evaluate_potential(model, prior, t, data).potential;
        },
        theta, 1e-6);
    CHECK((eval.grad_potential - fd).norm() / std::max(1.0, eval.grad_potential.norm()) < 1e-4);
  }
}

TEST_CASE("outside the likelihood support the potential is +inf", "[posterior]") {
  const auto data = testutil::square_data();
  const auto model = bayesel::mean_model(2);
  const auto eval =
      bayesel::evaluate_potential(model, bayesel::flat_prior(), theta2(1.5, 0.0), data);
  CHECK_FALSE(eval.feasible);
  CHECK(eval.potential == std::numeric_limits<double>::infinity());
  CHECK(eval.grad_potential.size() == 0);
  CHECK_FALSE(eval.el.feasible);
}

TEST_CASE("outside the prior support the potential is +inf without touching the likelihood",
          "[posterior]") {
  const auto data = testutil::square_data();
  const auto model = bayesel::mean_model(2);

  Prior ball;
  ball.name = "ball";
  ball.log_density = [](const VectorXd& t) {
    return t.norm() < 0.5 ? 0.0 : -std::numeric_limits<double>::infinity();
  };
  ball.grad_log_density = [](const VectorXd& t) { return VectorXd(VectorXd::Zero(t.size())); };

  // (0.9, 0.95) is well inside the likelihood support but outside the ball
  const auto eval = bayesel::evaluate_potential(model, ball, theta2(0.9, 0.95), data);
  CHECK_FALSE(eval.feasible);
  CHECK(eval.potential == std::numeric_limits<double>::infinity());

  CHECK(bayesel::evaluate_potential(model, ball, theta2(0.1, 0.0), data).feasible);
}

TEST_CASE("a NaN prior log-density is an error, not a rejection", "[posterior]") {
  const auto data = testutil::square_data();
  const auto model = bayesel::mean_model(2);
  Prior broken;
  broken.name = "broken";
  broken.log_density = [](const VectorXd&) { return std::numeric_limits<double>::quiet_NaN(); };
  broken.grad_log_density = [](const VectorXd& t) { return t; };
  CHECK_THROWS_AS(bayesel::evaluate_potential(model, broken, theta2(0, 0), data),
                  std::domain_error);
}

TEST_CASE("the potential climbs without bound toward the support boundary", "[posterior]") {
  const auto data = testutil::square_data();
  const auto model = bayesel::mean_model(2);
  const auto prior = bayesel::normal_prior(0.0, 1.0, 2);

  double prev_u = 0.0, prev_g = 0.0;
  for (int k = 4; k <= 16; ++k) {
    const auto eval = bayesel::evaluate_potential(
        model, prior, theta2(1.0 - std::pow(2.0, -k), 0.0), data);
    REQUIRE(eval.feasible);
    if (k > 4) {
      CHECK(eval.potential > prev_u);
      CHECK(eval.grad_potential.norm() > prev_g);
    }
    prev_u = eval.potential;
    prev_g = eval.grad_potential.norm();
  }
  CHECK(prev_u > 50.0);
  CHECK(prev_g > 1e4);
}
