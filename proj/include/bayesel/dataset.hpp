#pragma once

#include <stdexcept>
#include <utility>

#include <Eigen/Core>

namespace bayesel {

/// n observations, each a p-vector of reals.  Rectangular and finite by
/// construction.
struct Dataset {
  Eigen::MatrixXd rows;

  Dataset() = default;

  explicit Dataset(Eigen::MatrixXd values) : rows(std::move(values)) {
    if (rows.rows() < 1) {
      throw std::invalid_argument("Dataset: need at least one observation");
    }
    if (!rows.allFinite()) {
      throw std::invalid_argument("Dataset: non-finite entry");
    }
  }

  Eigen::Index n() const { return rows.rows(); }
  Eigen::Index p() const { return rows.cols(); }

  Eigen::VectorXd row(Eigen::Index i) const { return rows.row(i).transpose(); }

  /// Column means; a convenient feasible-start hint for mean-type models.
  Eigen::VectorXd column_means() const {
    return rows.colwise().mean().transpose();
  }
};

}  // namespace bayesel
