#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "bayesel/hmc.hpp"

namespace bayesel {

/// Sample autocorrelation with the biased (divide by n) normalisation:
/// r(k) = sum_t (z_t - zbar)(z_{t+k} - zbar) / sum_t (z_t - zbar)^2.
/// Returns lags 0..max_lag; r(0) = 1 exactly.
inline Eigen::VectorXd autocorrelation(const Eigen::VectorXd& series, int max_lag) {
  const Eigen::Index n = series.size();
  if (max_lag < 1) throw std::invalid_argument("autocorrelation: max_lag must be >= 1");
  if (n <= max_lag) throw std::invalid_argument("autocorrelation: series shorter than max_lag");
  const Eigen::VectorXd c = series.array() - series.mean();
  const double denom = c.squaredNorm();
  if (denom == 0.0) throw std::invalid_argument("autocorrelation: constant series");
  Eigen::VectorXd r(max_lag + 1);
  r[0] = 1.0;
  for (int k = 1; k <= max_lag; ++k) {
    r[k] = c.head(n - k).dot(c.tail(n - k)) / denom;
  }
  return r;
}

/// Effective sample size n / (1 + 2 sum_k r(k)), truncating the sum with
/// the initial-positive-sequence rule: lags are consumed in consecutive
/// pairs (1,2), (3,4), ... and summation stops at the first pair with a
/// nonpositive sum.
inline double effective_sample_size(const Eigen::VectorXd& series, int max_lag) {
  const Eigen::Index n = series.size();
  max_lag = static_cast<int>(std::min<Eigen::Index>(max_lag, n - 1));
  const Eigen::VectorXd r = autocorrelation(series, max_lag);
  double tau = 1.0;
  for (int k = 1; k + 1 <= max_lag; k += 2) {
    const double pair = r[k] + r[k + 1];
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return static_cast<double>(n) / tau;
}

/// Per-coordinate summary of a chain after discarding burn_in leading rows.
struct ChainSummary {
  int burn_in = 0;
  double acceptance_rate = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::MatrixXd quantiles;      ///< rows = coordinates, cols = 2.5/25/50/75/97.5%
  std::vector<Eigen::VectorXd> acf;  ///< per coordinate, lags 0..L
  Eigen::VectorXd ess;            ///< NaN for zero-variance coordinates
};

/// Type-7 quantile (linear interpolation between order statistics) of a
/// sorted vector.
inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
  const std::size_t m = sorted.size();
  if (m == 1) return sorted[0];
  const double h = (static_cast<double>(m) - 1.0) * prob;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, m - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline ChainSummary summarize(const ChainResult& chain, int burn_in, int max_lag = 50) {
  const Eigen::Index n = chain.samples.rows();
  const Eigen::Index d = chain.samples.cols();
  if (burn_in < 0 || burn_in >= n) {
    throw std::invalid_argument("summarize: burn_in must be in [0, n_samples)");
  }
  const Eigen::MatrixXd kept = chain.samples.bottomRows(n - burn_in);
  const Eigen::Index m = kept.rows();

  ChainSummary s;
  s.burn_in = burn_in;
  s.acceptance_rate = chain.acceptance_rate;
  s.mean = kept.colwise().mean();
  s.sd.resize(d);
  s.quantiles.resize(d, 5);
  s.ess.resize(d);
  s.acf.resize(d);

  const double probs[5] = {0.025, 0.25, 0.5, 0.75, 0.975};
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::VectorXd col = kept.col(j);
    const Eigen::VectorXd centered = col.array() - s.mean[j];
    s.sd[j] = m > 1 ? std::sqrt(centered.squaredNorm() / static_cast<double>(m - 1)) : 0.0;

    std::vector<double> sorted(col.data(), col.data() + m);
    std::sort(sorted.begin(), sorted.end());
    for (int t = 0; t < 5; ++t) s.quantiles(j, t) = quantile_sorted(sorted, probs[t]);

    const int lag = static_cast<int>(std::min<Eigen::Index>(max_lag, m - 1));
    if (centered.squaredNorm() > 0.0 && lag >= 1) {
      s.acf[j] = autocorrelation(col, lag);
      s.ess[j] = effective_sample_size(col, lag);
    } else {
      // zero-variance (or too-short) coordinate: ACF is undefined
      s.acf[j] = Eigen::VectorXd::Ones(1);
      s.ess[j] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return s;
}

}  // namespace bayesel
