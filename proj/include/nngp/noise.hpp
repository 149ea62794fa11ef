#pragma once

#include <stdexcept>
#include <string>

namespace nngp {

enum class NoiseMode { None, Additive, Multiplicative };

/// Injected-noise description: how the noise combines with layer inputs
/// (additive or multiplicative) and its second moment mu2 = E[eps^2].
/// Multiplicative noise has mean 1, so mu2 = 1 + Var[eps] >= 1; dropout with
/// keep probability p corresponds to mu2 = 1/p.
struct NoiseSpec {
  NoiseMode mode = NoiseMode::None;
  double mu2 = 1.0;

  static NoiseSpec none() { return {NoiseMode::None, 1.0}; }
  static NoiseSpec additive(double mu2) {
    NoiseSpec spec{NoiseMode::Additive, mu2};
    spec.validate();
    return spec;
  }
  static NoiseSpec multiplicative(double mu2) {
    NoiseSpec spec{NoiseMode::Multiplicative, mu2};
    spec.validate();
    return spec;
  }
  static NoiseSpec dropout(double keep_prob) {
    if (!(keep_prob > 0.0 && keep_prob <= 1.0))
      throw std::invalid_argument("dropout keep probability must be in (0, 1]");
    return multiplicative(1.0 / keep_prob);
  }

  void validate() const {
    if (!(mu2 >= 0.0)) throw std::invalid_argument("noise mu2 must be nonnegative");
    if (mode == NoiseMode::Multiplicative && mu2 < 1.0)
      throw std::invalid_argument("multiplicative noise requires mu2 >= 1 (mean-one noise)");
    if (mode == NoiseMode::None && mu2 != 1.0)
      throw std::invalid_argument("noiseless spec must have mu2 = 1");
  }

  /// Second moment entering the diagonal recursion's geometric ratio:
  /// mu2 for multiplicative noise, 1 otherwise (additive noise shifts the
  /// recursion instead of scaling it).
  double effective_mu2() const { return mode == NoiseMode::Multiplicative ? mu2 : 1.0; }

  /// True when the kernel behaves exactly like the noiseless one
  /// (mode None, multiplicative with mu2 = 1, or additive with mu2 = 0).
  bool is_noiseless() const {
    switch (mode) {
      case NoiseMode::None: return true;
      case NoiseMode::Multiplicative: return mu2 == 1.0;
      case NoiseMode::Additive: return mu2 == 0.0;
    }
    return true;
  }

  std::string describe() const {
    switch (mode) {
      case NoiseMode::None: return "none";
      case NoiseMode::Additive: return "add(mu2=" + std::to_string(mu2) + ")";
      case NoiseMode::Multiplicative: return "mult(mu2=" + std::to_string(mu2) + ")";
    }
    return "?";
  }
};

}  // namespace nngp
