#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nngp/dataset.hpp"
#include "nngp/kernel.hpp"
#include "nngp/parallel.hpp"

namespace nngp {

/// Raised when a kernel entry turns non-finite during the layer recursion
/// (divergent regimes at depth). Carries the offending layer and the regime
/// classification of the parameters for the diagnostic.
class GramOverflowError : public std::runtime_error {
 public:
  GramOverflowError(int layer, Eigen::Index i, Eigen::Index j, const RegimeLabel& regime)
      : std::runtime_error("kernel overflow at layer " + std::to_string(layer) + " for entry (" +
                           std::to_string(i) + ", " + std::to_string(j) + "); regime " +
                           regime.describe()),
        layer_(layer),
        regime_(regime) {}

  int layer() const { return layer_; }
  const RegimeLabel& regime() const { return regime_; }

 private:
  int layer_;
  RegimeLabel regime_;
};

/// Per-layer snapshots of one tracked kernel entry.
struct DepthTraceEntry {
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  std::vector<double> values;  // k^l for l = 0..L (may stop early on overflow)
};

/// The N x N train covariance at depth L. Only this block is ever stored;
/// output units are independent, so the Kronecker factor against the output
/// identity stays implicit.
struct GramMatrix {
  Eigen::MatrixXd values;
  KernelParams params;
  std::vector<DepthTraceEntry> depth_trace;

  Eigen::Index n() const { return values.rows(); }
};

namespace detail {

/// Per-layer diagonal sequences for every input row: out(l, i) = k^l(x_i,x_i),
/// l = 0..L. Throws on overflow.
inline Eigen::MatrixXd diag_sequences(const Eigen::VectorXd& base_self,
                                      const KernelParams& params) {
  const Eigen::Index n = base_self.size();
  Eigen::MatrixXd seq(params.depth + 1, n);
  seq.row(0) = base_self.transpose();
  for (int l = 1; l <= params.depth; ++l) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double next = step_diag(seq(l - 1, i), params);
      if (!std::isfinite(next)) throw GramOverflowError(l, i, i, classify_regime(params));
      seq(l, i) = next;
    }
  }
  return seq;
}

/// Base self values for all rows of an input matrix.
inline Eigen::VectorXd base_self_values(const Eigen::MatrixXd& inputs, const NoiseSpec& noise) {
  Eigen::VectorXd self = inputs.rowwise().squaredNorm() / static_cast<double>(inputs.cols());
  switch (noise.mode) {
    case NoiseMode::Multiplicative: self *= noise.mu2; break;
    case NoiseMode::Additive: self.array() += noise.mu2; break;
    case NoiseMode::None: break;
  }
  return self;
}

/// Off-diagonal recursion for one pair given precomputed diagonal sqrt
/// sequences. Writes k^l into trace (l = 0..L) when trace is non-null.
/// Returns NaN-free final value or throws on overflow.
inline double offdiag_recursion(double base_cross, const Eigen::MatrixXd& sqrt_diag,
                                Eigen::Index i, Eigen::Index j, const KernelParams& params,
                                std::vector<double>* trace = nullptr) {
  double k_xy = base_cross;
  if (trace) trace->push_back(k_xy);
  const double half_sw2 = 0.5 * params.sigma_w2;
  for (int l = 1; l <= params.depth; ++l) {
    const double scale = sqrt_diag(l - 1, i) * sqrt_diag(l - 1, j);
    double next;
    if (scale == 0.0) {
      next = params.sigma_b2;
    } else {
      const double rho = clamp_correlation(k_xy / scale);
      next = half_sw2 * scale * (rho_g(rho) + 0.5 * rho) + params.sigma_b2;
    }
    if (!std::isfinite(next)) throw GramOverflowError(l, i, j, classify_regime(params));
    k_xy = next;
    if (trace) trace->push_back(k_xy);
  }
  return k_xy;
}

}  // namespace detail

/// Build the train Gram: entry (i, j) is the L-layer recursion seeded by the
/// input-layer kernel of (x_i, x_j). The upper triangle is computed (pairs in
/// parallel when n_threads != 1) and mirrored, so the result is bit-exact
/// symmetric and independent of scheduling.
inline GramMatrix build_train_gram(const Dataset& data, const KernelParams& params,
                                   const std::vector<std::pair<Eigen::Index, Eigen::Index>>&
                                       trace_pairs = {},
                                   int n_threads = 1) {
  data.validate();
  params.validate();
  const Eigen::Index n = data.n();
  const double dim = static_cast<double>(data.dim());

  const Eigen::MatrixXd base_cross = (data.inputs * data.inputs.transpose()) / dim;
  const Eigen::VectorXd base_self = detail::base_self_values(data.inputs, params.noise);
  const Eigen::MatrixXd diag = detail::diag_sequences(base_self, params);
  const Eigen::MatrixXd sqrt_diag = diag.cwiseSqrt();

  GramMatrix gram;
  gram.params = params;
  gram.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) gram.values(i, i) = diag(params.depth, i);

  // strict upper triangle as a flat list of pairs
  const std::size_t n_pairs = static_cast<std::size_t>(n) * (n - 1) / 2;

  auto pair_of = [n](std::size_t p) {
    // row-major enumeration of i < j
    Eigen::Index i = 0;
    std::size_t row_len = static_cast<std::size_t>(n - 1);
    while (p >= row_len) {
      p -= row_len;
      ++i;
      --row_len;
    }
    return std::make_pair(i, static_cast<Eigen::Index>(i + 1 + static_cast<Eigen::Index>(p)));
  };

  std::atomic<std::size_t> first_failure{n_pairs + 1};
  parallel_for_blocks(n_pairs, n_threads, [&](std::size_t begin, std::size_t end, int) {
    if (begin >= end) return;
    auto [i, j] = pair_of(begin);
    for (std::size_t p = begin; p < end; ++p) {
      try {
        gram.values(i, j) = detail::offdiag_recursion(base_cross(i, j), sqrt_diag, i, j, params);
      } catch (const GramOverflowError&) {
        // record the earliest failing pair; rescan serially below for a
        // schedule-independent diagnostic
        std::size_t expected = first_failure.load();
        while (p < expected && !first_failure.compare_exchange_weak(expected, p)) {
        }
        break;
      }
      ++j;
      if (j == n) {
        ++i;
        j = i + 1;
      }
    }
  });

  if (first_failure.load() <= n_pairs) {
    auto [i, j] = pair_of(first_failure.load());
    detail::offdiag_recursion(base_cross(i, j), sqrt_diag, i, j, params);  // rethrows
  }

  gram.values.triangularView<Eigen::StrictlyLower>() =
      gram.values.triangularView<Eigen::StrictlyUpper>().transpose();

  for (const auto& [ti, tj] : trace_pairs) {
    if (ti < 0 || tj < 0 || ti >= n || tj >= n)
      throw std::invalid_argument("trace pair index out of range");
    DepthTraceEntry entry{ti, tj, {}};
    entry.values.reserve(params.depth + 1);
    if (ti == tj) {
      for (int l = 0; l <= params.depth; ++l) entry.values.push_back(diag(l, ti));
    } else {
      detail::offdiag_recursion(base_cross(ti, tj), sqrt_diag, ti, tj, params, &entry.values);
    }
    gram.depth_trace.push_back(std::move(entry));
  }
  return gram;
}

/// Cross-covariances of a test point against the training set, plus the
/// test point's own diagonal value k^L(x*, x*) (observation noise is *not*
/// added here; the GP engine owns sigma_eps2).
inline std::pair<Eigen::VectorXd, double> build_cross_vector(const Dataset& data,
                                                             const Eigen::VectorXd& x_star,
                                                             const KernelParams& params) {
  data.validate();
  params.validate();
  if (x_star.size() != data.dim())
    throw std::invalid_argument("test point dimension differs from training data");
  const Eigen::Index n = data.n();
  const double dim = static_cast<double>(data.dim());

  Eigen::MatrixXd all_inputs(n + 1, data.dim());
  all_inputs.topRows(n) = data.inputs;
  all_inputs.row(n) = x_star.transpose();

  const Eigen::VectorXd base_self = detail::base_self_values(all_inputs, params.noise);
  const Eigen::MatrixXd diag = detail::diag_sequences(base_self, params);
  const Eigen::MatrixXd sqrt_diag = diag.cwiseSqrt();
  const Eigen::VectorXd base_cross = (data.inputs * x_star) / dim;

  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k(i) = detail::offdiag_recursion(base_cross(i), sqrt_diag, i, n, params);
  return {k, diag(params.depth, n)};
}

/// Frobenius norm of the covariance, the scalar richness proxy.
inline double frobenius_norm(const GramMatrix& gram) { return gram.values.norm(); }

}  // namespace nngp
