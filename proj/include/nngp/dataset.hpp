#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace nngp {

/// A training or test set: inputs are rows of an N x D0 matrix, targets are
/// rows of an N x C matrix (C = 1 for regression, C = number of classes for
/// recoded classification).
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
  std::vector<std::int64_t> row_ids;

  Eigen::Index n() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }

  void validate() const {
    if (inputs.rows() < 1 || inputs.cols() < 1)
      throw std::invalid_argument("dataset must have at least one row and one column");
    if (!inputs.allFinite()) throw std::invalid_argument("dataset inputs contain non-finite values");
    if (targets.size() > 0) {
      if (targets.rows() != inputs.rows())
        throw std::invalid_argument("dataset targets row count differs from inputs");
      if (!targets.allFinite()) throw std::invalid_argument("dataset targets contain non-finite values");
    }
    if (!row_ids.empty() && static_cast<Eigen::Index>(row_ids.size()) != inputs.rows())
      throw std::invalid_argument("dataset row_ids length differs from inputs");
  }

  static std::vector<std::int64_t> default_ids(Eigen::Index n) {
    std::vector<std::int64_t> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
  }
};

}  // namespace nngp
