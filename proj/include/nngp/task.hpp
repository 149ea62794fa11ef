#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "nngp/gp.hpp"

namespace nngp {

/// Class labels recoded as zero-mean regression targets: 0.9 at the true
/// class index, -0.1 everywhere else. The constants are fixed, not knobs.
struct ClassTargets {
  std::vector<int> labels;
  Eigen::MatrixXd encoded;  // N x C
};

inline constexpr double kTargetHit = 0.9;
inline constexpr double kTargetMiss = -0.1;

inline ClassTargets encode_labels(const std::vector<int>& labels, int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("num_classes must be positive");
  ClassTargets out;
  out.labels = labels;
  out.encoded.setConstant(static_cast<Eigen::Index>(labels.size()), num_classes, kTargetMiss);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " out of range [0, " +
                                  std::to_string(num_classes) + ")");
    out.encoded(static_cast<Eigen::Index>(i), labels[i]) = kTargetHit;
  }
  return out;
}

/// Argmax of the posterior mean vector; ties break toward the lowest index.
inline int decode_prediction(const Eigen::VectorXd& mean_vec) {
  if (mean_vec.size() < 1) throw std::invalid_argument("empty prediction vector");
  if (!mean_vec.allFinite()) throw std::invalid_argument("non-finite prediction vector");
  int best = 0;
  for (Eigen::Index c = 1; c < mean_vec.size(); ++c)
    if (mean_vec(c) > mean_vec(best)) best = static_cast<int>(c);
  return best;
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("prediction/truth length mismatch");
  if (predicted.empty()) throw std::invalid_argument("empty prediction set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

inline double mean_predictive_variance(const std::vector<PosteriorPredictive>& preds) {
  if (preds.empty()) throw std::invalid_argument("empty prediction list");
  double sum = 0.0;
  for (const auto& p : preds) sum += p.variance;
  return sum / static_cast<double>(preds.size());
}

}  // namespace nngp
