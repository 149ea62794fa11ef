#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "nngp/noise.hpp"

namespace nngp {

/// Kernel hyperparameters of a noisy ReLU network kernel: weight variance
/// scale sigma_w2, bias variance sigma_b2, injected-noise spec, and depth L.
struct KernelParams {
  double sigma_w2 = 2.0;
  double sigma_b2 = 0.0;
  NoiseSpec noise = NoiseSpec::none();
  int depth = 1;

  void validate() const {
    if (!(sigma_w2 > 0.0)) throw std::invalid_argument("sigma_w2 must be positive");
    if (!(sigma_b2 >= 0.0)) throw std::invalid_argument("sigma_b2 must be nonnegative");
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    noise.validate();
  }
};

/// Scalar state of the pairwise recursion at layer `layer`: both variances
/// and the covariance. Valid states satisfy Cauchy-Schwarz up to rounding.
struct KernelState {
  double k_xx = 0.0;
  double k_yy = 0.0;
  double k_xy = 0.0;
  int layer = 0;

  static constexpr double kCauchySchwarzTol = 1e-12;

  void validate() const {
    if (!(k_xx >= 0.0) || !(k_yy >= 0.0))
      throw std::invalid_argument("kernel variances must be nonnegative");
    if (std::abs(k_xy) > std::sqrt(k_xx * k_yy) + kCauchySchwarzTol)
      throw std::invalid_argument("kernel state violates Cauchy-Schwarz");
  }
};

enum class RegimeKind { Vanishing, ConstantLimit, Divergent, FixedPreserving };

enum class TableCase {
  A1, A2,            // additive noise
  M1, M2, M3, M4, M5,  // multiplicative noise
  NoiselessOrdered, NoiselessCritical, NoiselessDivergent
};

/// Depth-limit classification of the diagonal recursion.
struct RegimeLabel {
  RegimeKind kind;
  TableCase table_case;
  /// Finite positive limit of k^L(x,x); only meaningful for ConstantLimit.
  double limit_value = std::numeric_limits<double>::quiet_NaN();

  std::string describe() const;
};

namespace detail {

/// Relative tolerance for boundary comparisons against the critical weight
/// variance, chosen so decimal round-trips of 2/mu2 still register as exact.
inline constexpr double kCriticalRelTol = 1e-12;

inline double clamp_correlation(double rho) {
  if (rho > 1.0) {
    if (rho > 1.0 + 1e-9) throw std::domain_error("correlation exceeds 1 beyond rounding slack");
    return 1.0;
  }
  if (rho < -1.0) {
    if (rho < -1.0 - 1e-9) throw std::domain_error("correlation below -1 beyond rounding slack");
    return -1.0;
  }
  return rho;
}

/// Sum of the first L terms of a geometric series with ratio r, switching to
/// the series around r = 1 where the closed form cancels catastrophically.
inline double geometric_sum(double r, int terms) {
  const double d = r - 1.0;
  const double n = static_cast<double>(terms);
  if (std::abs(d) <= 1e-8) return n + d * n * (n - 1.0) / 2.0;
  return (1.0 - std::pow(r, n)) / (1.0 - r);
}

}  // namespace detail

/// rho * g(rho) = (rho asin(rho) + sqrt(1 - rho^2)) / pi, the continuous
/// product form actually used by the recursion (g itself blows up at 0).
inline double rho_g(double rho) {
  rho = detail::clamp_correlation(rho);
  return (rho * std::asin(rho) + std::sqrt(std::max(0.0, 1.0 - rho * rho))) / M_PI;
}

/// ReLU correlation map g(rho) for rho != 0.
inline double g_rho(double rho) {
  rho = detail::clamp_correlation(rho);
  if (rho == 0.0) throw std::domain_error("g(rho) is undefined at rho = 0; use rho_g");
  return rho_g(rho) / rho;
}

/// Input-layer kernel value between two distinct inputs. Noise masks are
/// drawn independently per input, so no second-moment factor enters and the
/// value is <x, y> / D0 in every noise mode.
inline double base_kernel_cross(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("base_kernel: input dimensions differ (" +
                                std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  if (x.empty()) throw std::invalid_argument("base_kernel: empty input");
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  return dot / static_cast<double>(x.size());
}

/// Input-layer kernel value of an input with itself, where the shared noise
/// draw contributes its second moment.
inline double base_kernel_self(std::span<const double> x, const NoiseSpec& noise) {
  if (x.empty()) throw std::invalid_argument("base_kernel: empty input");
  double dot = 0.0;
  for (double v : x) dot += v * v;
  dot /= static_cast<double>(x.size());
  switch (noise.mode) {
    case NoiseMode::Multiplicative: return noise.mu2 * dot;
    case NoiseMode::Additive: return dot + noise.mu2;
    case NoiseMode::None: return dot;
  }
  return dot;
}

/// Convenience dispatcher treating element-wise equal inputs as the same
/// input (shared noise). Structured callers (the Gram builder) know the
/// identity of inputs and call the self/cross forms directly.
inline double base_kernel(std::span<const double> x, std::span<const double> y,
                          const NoiseSpec& noise) {
  if (x.size() != y.size())
    throw std::invalid_argument("base_kernel: input dimensions differ");
  bool same = true;
  for (std::size_t i = 0; i < x.size() && same; ++i) same = x[i] == y[i];
  return same ? base_kernel_self(x, noise) : base_kernel_cross(x, y);
}

/// One layer of the diagonal recursion
///   k^l(x,x) = (sigma_w2 / 2) k^{l-1}(x,x) (.) mu2 + sigma_b2,
/// where the noise combinator (.) multiplies the scaled kernel for
/// multiplicative noise and shifts it for additive noise.
inline double step_diag(double k_prev, const KernelParams& params) {
  if (!(k_prev >= 0.0)) throw std::invalid_argument("step_diag: negative variance");
  const double scaled = 0.5 * params.sigma_w2 * k_prev;
  switch (params.noise.mode) {
    case NoiseMode::Multiplicative: return scaled * params.noise.mu2 + params.sigma_b2;
    case NoiseMode::Additive: return scaled + params.noise.mu2 + params.sigma_b2;
    case NoiseMode::None: return scaled + params.sigma_b2;
  }
  return scaled + params.sigma_b2;
}

/// One layer of the off-diagonal recursion,
///   k^l(x,x') = (sigma_w2 / 2) sqrt(k_xx k_yy) (rho_g(rho) + rho / 2) + sigma_b2.
/// Noise never enters here; it acts on the off-diagonals only through the
/// correlation rho against the noise-inflated diagonals. A zero variance
/// means the pre-activation is constant zero, so only the bias survives.
inline double step_offdiag(const KernelState& state, const KernelParams& params) {
  state.validate();
  const double cross = state.k_xx * state.k_yy;
  if (cross == 0.0) return params.sigma_b2;
  const double scale = std::sqrt(cross);
  const double rho = detail::clamp_correlation(state.k_xy / scale);
  return 0.5 * params.sigma_w2 * scale * (rho_g(rho) + 0.5 * rho) + params.sigma_b2;
}

/// Advance a full pairwise state by one layer.
inline KernelState step_state(const KernelState& state, const KernelParams& params) {
  KernelState next;
  next.k_xx = step_diag(state.k_xx, params);
  next.k_yy = step_diag(state.k_yy, params);
  next.k_xy = step_offdiag(state, params);
  next.layer = state.layer + 1;
  return next;
}

/// Closed form of `depth` applications of step_diag. The recursion is affine
/// in the previous value, so
///   k^L = r^L k0 + c * sum_{l=0}^{L-1} r^l
/// with r = sigma_w2 mu2 / 2, c = sigma_b2 for multiplicative noise and
/// r = sigma_w2 / 2, c = mu2 + sigma_b2 for additive noise.
inline double closed_form_diag(double k0, const KernelParams& params) {
  if (!(k0 >= 0.0)) throw std::invalid_argument("closed_form_diag: negative variance");
  double ratio, increment;
  switch (params.noise.mode) {
    case NoiseMode::Multiplicative:
      ratio = 0.5 * params.sigma_w2 * params.noise.mu2;
      increment = params.sigma_b2;
      break;
    case NoiseMode::Additive:
      ratio = 0.5 * params.sigma_w2;
      increment = params.noise.mu2 + params.sigma_b2;
      break;
    case NoiseMode::None:
    default:
      ratio = 0.5 * params.sigma_w2;
      increment = params.sigma_b2;
      break;
  }
  return std::pow(ratio, params.depth) * k0 + increment * detail::geometric_sum(ratio, params.depth);
}

/// Critical kernel parameters {2 / mu2, 0}: the unique setting where the
/// diagonal recursion is an exact fixed point at any depth. Additive noise
/// has no such setting (every additive case is degenerate in depth).
inline std::pair<double, double> critical_params(const NoiseSpec& noise) {
  noise.validate();
  if (noise.mode == NoiseMode::Additive && noise.mu2 > 0.0)
    throw std::invalid_argument("no critical parameters exist for additive noise");
  return {2.0 / noise.effective_mu2(), 0.0};
}

/// True when sigma_w2 sits on the critical boundary 2 / mu2_eff within a
/// relative tolerance that survives decimal round-trips.
inline bool on_critical_boundary(double sigma_w2, const NoiseSpec& noise) {
  const double boundary = 2.0 / noise.effective_mu2();
  return std::abs(sigma_w2 - boundary) <= detail::kCriticalRelTol * boundary;
}

/// Depth-limit taxonomy of the diagonal recursion.
inline RegimeLabel classify_regime(const KernelParams& params) {
  params.validate();
  const bool noiseless = params.noise.is_noiseless();
  const double mu2_eff = params.noise.effective_mu2();
  const double sw2 = params.sigma_w2;
  const double sb2 = params.sigma_b2;
  const double boundary = 2.0 / mu2_eff;
  const bool critical = on_critical_boundary(sw2, params.noise);
  const double ratio = 0.5 * sw2 * mu2_eff;

  if (noiseless) {
    if (critical) {
      return sb2 == 0.0 ? RegimeLabel{RegimeKind::FixedPreserving, TableCase::NoiselessCritical}
                        : RegimeLabel{RegimeKind::Divergent, TableCase::NoiselessCritical};
    }
    if (sw2 < boundary) {
      if (sb2 == 0.0) return {RegimeKind::Vanishing, TableCase::NoiselessOrdered};
      return {RegimeKind::ConstantLimit, TableCase::NoiselessOrdered, sb2 / (1.0 - ratio)};
    }
    return {RegimeKind::Divergent, TableCase::NoiselessDivergent};
  }

  if (params.noise.mode == NoiseMode::Additive) {
    // sigma_w2 = 2 grows linearly in depth, so the boundary itself diverges.
    if (sw2 < 2.0 && !on_critical_boundary(sw2, NoiseSpec::none())) {
      return {RegimeKind::ConstantLimit, TableCase::A1,
              (params.noise.mu2 + sb2) / (1.0 - 0.5 * sw2)};
    }
    return {RegimeKind::Divergent, TableCase::A2};
  }

  // multiplicative, mu2 > 1
  if (critical) {
    return sb2 == 0.0 ? RegimeLabel{RegimeKind::FixedPreserving, TableCase::M5}
                      : RegimeLabel{RegimeKind::Divergent, TableCase::M4};
  }
  if (sw2 < boundary) {
    if (sb2 == 0.0) return {RegimeKind::Vanishing, TableCase::M1};
    return {RegimeKind::ConstantLimit, TableCase::M2, sb2 / (1.0 - ratio)};
  }
  return {RegimeKind::Divergent, TableCase::M3};
}

inline const char* to_string(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::Vanishing: return "Vanishing";
    case RegimeKind::ConstantLimit: return "ConstantLimit";
    case RegimeKind::Divergent: return "Divergent";
    case RegimeKind::FixedPreserving: return "FixedPreserving";
  }
  return "?";
}

inline const char* to_string(TableCase c) {
  switch (c) {
    case TableCase::A1: return "A1";
    case TableCase::A2: return "A2";
    case TableCase::M1: return "M1";
    case TableCase::M2: return "M2";
    case TableCase::M3: return "M3";
    case TableCase::M4: return "M4";
    case TableCase::M5: return "M5";
    case TableCase::NoiselessOrdered: return "NoiselessOrdered";
    case TableCase::NoiselessCritical: return "NoiselessCritical";
    case TableCase::NoiselessDivergent: return "NoiselessDivergent";
  }
  return "?";
}

inline std::string RegimeLabel::describe() const {
  std::string s = std::string(to_string(table_case)) + " " + to_string(kind);
  if (kind == RegimeKind::ConstantLimit) s += " (limit " + std::to_string(limit_value) + ")";
  return s;
}

}  // namespace nngp
