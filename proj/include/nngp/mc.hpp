#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nngp/kernel.hpp"
#include "nngp/parallel.hpp"
#include "nngp/rng.hpp"

namespace nngp {

/// Concrete noise distribution used for simulation. The analytic kernel
/// depends only on mu2, so offering two multiplicative laws doubles as a
/// distribution-robustness check.
enum class NoiseLaw {
  DropoutScaled,          // eps in {0, mu2} with P(mu2) = 1/mu2
  GaussianMultiplicative, // eps ~ N(1, mu2 - 1)
  GaussianAdditive        // eps ~ N(0, mu2)
};

struct McEstimate {
  double estimate = 0.0;
  double std_err = 0.0;
};

/// Monte-Carlo estimate of one layer step: draws (u, v) from the bivariate
/// normal with the previous layer's covariance and averages
/// sigma_w2 * relu(u) relu(v) + sigma_b2.
inline McEstimate mc_layer_expectation(double k_xx, double k_yy, double k_xy, double sigma_w2,
                                       double sigma_b2, long n_samples, std::uint64_t seed) {
  if (n_samples < 2) throw std::invalid_argument("mc_layer_expectation: need at least 2 samples");
  if (!(k_xx >= 0.0) || !(k_yy >= 0.0) || k_xy * k_xy > k_xx * k_yy * (1.0 + 1e-12) + 1e-300)
    throw std::invalid_argument("mc_layer_expectation: 2x2 covariance not PSD");

  const double a = std::sqrt(k_xx);
  const double b = a > 0.0 ? k_xy / a : 0.0;
  const double c = std::sqrt(std::max(0.0, k_yy - b * b));

  Rng rng(seed);
  double sum = 0.0, sumsq = 0.0;
  for (long s = 0; s < n_samples; ++s) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double u = a * z1;
    const double v = b * z1 + c * z2;
    const double val = sigma_w2 * std::max(0.0, u) * std::max(0.0, v) + sigma_b2;
    sum += val;
    sumsq += val * val;
  }
  const double n = static_cast<double>(n_samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sumsq / n - mean * mean);
  return {mean, std::sqrt(var / n)};
}

namespace detail {

inline double draw_noise(Rng& rng, NoiseLaw law, double mu2) {
  switch (law) {
    case NoiseLaw::DropoutScaled:
      // keep probability p = 1/mu2, kept units scaled by mu2: E = 1, E^2 = mu2
      return rng.uniform() * mu2 < 1.0 ? mu2 : 0.0;
    case NoiseLaw::GaussianMultiplicative:
      return 1.0 + std::sqrt(mu2 - 1.0) * rng.normal();
    case NoiseLaw::GaussianAdditive:
      return std::sqrt(mu2) * rng.normal();
  }
  return 1.0;
}

}  // namespace detail

/// Simulate independent finite-width noisy ReLU networks and return the
/// empirical 2x2 second-moment matrix of output units evaluated at both
/// inputs.
///
/// The simulated network matches the kernel construction exactly: layer-0
/// pre-activations are Gaussian with the input pair's base-kernel covariance
/// (the recursion treats the input layer like every other layer), hidden
/// layers apply ReLU, multiplicative noise masks activations entrywise with
/// masks drawn independently per input, and additive noise perturbs
/// pre-activations after aggregation (the reading under which the expanded
/// variance's per-layer increment is mu2 + sigma_b2).
///
/// By default one output unit per network is recorded (the op's contract);
/// n_output_units > 1 averages several output units of each network, which
/// shares the hidden layers and sharply reduces estimator variance for
/// convergence studies.
inline Eigen::Matrix2d mc_finite_network_gram(const Eigen::VectorXd& x0, const Eigen::VectorXd& x1,
                                              int width, const KernelParams& params,
                                              long n_networks, std::uint64_t seed, NoiseLaw law,
                                              int n_output_units = 1, int n_threads = 1) {
  params.validate();
  if (x0.size() != x1.size() || x0.size() < 1)
    throw std::invalid_argument("mc_finite_network_gram: input dimensions invalid");
  if (width < 1 || n_networks < 1 || n_output_units < 1)
    throw std::invalid_argument("mc_finite_network_gram: width/counts must be positive");
  const bool mult_law =
      law == NoiseLaw::DropoutScaled || law == NoiseLaw::GaussianMultiplicative;
  if (mult_law && params.noise.mode == NoiseMode::Additive)
    throw std::invalid_argument("multiplicative noise law requires a multiplicative spec");
  if (!mult_law && params.noise.mode == NoiseMode::Multiplicative)
    throw std::invalid_argument("additive noise law requires an additive spec");

  const int depth = params.depth;
  const double mu2 = params.noise.mu2;
  const bool noiseless = params.noise.is_noiseless();
  const bool additive = params.noise.mode == NoiseMode::Additive && !noiseless;
  const double sb = std::sqrt(params.sigma_b2);
  const double add_sd = additive ? std::sqrt(mu2) : 0.0;

  // base-kernel covariance of the layer-0 pre-activations
  std::vector<double> xv(x0.begin(), x0.end()), yv(x1.begin(), x1.end());
  const double kxx0 = base_kernel_self(xv, params.noise);
  const double kyy0 = base_kernel_self(yv, params.noise);
  const double kxy0 = base_kernel_cross(xv, yv);
  const double chol_a = std::sqrt(kxx0);
  const double chol_b = chol_a > 0.0 ? kxy0 / chol_a : 0.0;
  const double chol_c = std::sqrt(std::max(0.0, kyy0 - chol_b * chol_b));

  const int blocks = resolve_threads(n_threads);
  std::vector<Eigen::Matrix2d> partial(blocks, Eigen::Matrix2d::Zero());

  parallel_for_blocks(static_cast<std::size_t>(n_networks), n_threads,
                      [&](std::size_t begin, std::size_t end, int block_id) {
    Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
    std::vector<double> ya(width), yb(width), ha, hb;
    for (std::size_t net = begin; net < end; ++net) {
      Rng rng = Rng::stream(seed, net);
      for (int d = 0; d < width; ++d) {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        ya[d] = std::max(0.0, chol_a * z1);
        yb[d] = std::max(0.0, chol_b * z1 + chol_c * z2);
      }
      for (int l = 1; l <= depth; ++l) {
        const int out_dim = l == depth ? n_output_units : width;
        const double w_scale = std::sqrt(params.sigma_w2 / static_cast<double>(width));
        if (!noiseless && mult_law) {
          // entrywise activation masks, independent per input
          for (int d = 0; d < width; ++d) ya[d] *= detail::draw_noise(rng, law, mu2);
          for (int d = 0; d < width; ++d) yb[d] *= detail::draw_noise(rng, law, mu2);
        }
        ha.assign(out_dim, 0.0);
        hb.assign(out_dim, 0.0);
        for (int u = 0; u < out_dim; ++u) {
          double sa = 0.0, sc = 0.0;
          for (int d = 0; d < width; ++d) {
            const double w = w_scale * rng.normal();
            sa += w * ya[d];
            sc += w * yb[d];
          }
          const double bias = sb > 0.0 ? sb * rng.normal() : 0.0;
          ha[u] = sa + bias;
          hb[u] = sc + bias;
          if (additive) {
            // pre-activation noise, redrawn per input evaluation
            ha[u] += add_sd * rng.normal();
            hb[u] += add_sd * rng.normal();
          }
        }
        if (l < depth) {
          for (int u = 0; u < width; ++u) {
            ya[u] = std::max(0.0, ha[u]);
            yb[u] = std::max(0.0, hb[u]);
          }
        }
      }
      for (int u = 0; u < n_output_units; ++u) {
        acc(0, 0) += ha[u] * ha[u];
        acc(1, 1) += hb[u] * hb[u];
        acc(0, 1) += ha[u] * hb[u];
      }
    }
    partial[block_id] += acc;
  });

  Eigen::Matrix2d total = Eigen::Matrix2d::Zero();
  for (const auto& p : partial) total += p;  // fixed block order
  total /= static_cast<double>(n_networks) * n_output_units;
  total(1, 0) = total(0, 1);
  return total;
}

}  // namespace nngp
