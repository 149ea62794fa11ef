#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "nngp/gram.hpp"
#include "nngp/rng.hpp"

namespace nngp {

/// Counts Cholesky factorisations performed by this module. Lets tests assert
/// that multi-channel targets reuse a single factorisation of the N x N Gram.
inline std::atomic<long>& factorization_count() {
  static std::atomic<long> count{0};
  return count;
}

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(double min_eigenvalue, double max_jitter)
      : std::runtime_error("Cholesky failed even at maximum jitter " + std::to_string(max_jitter) +
                           "; smallest eigenvalue " + std::to_string(min_eigenvalue)),
        min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

namespace detail {

/// Factorise a symmetric matrix, escalating jitter through
/// {0, 1e-10, ..., 1e-4} times the mean diagonal until the Cholesky
/// succeeds. Returns the lower factor and the jitter actually added.
inline std::pair<Eigen::MatrixXd, double> cholesky_with_jitter(const Eigen::MatrixXd& m) {
  const double diag_mean = m.diagonal().mean();
  const double diag_scale = diag_mean > 0.0 ? diag_mean : 1.0;
  double jitter = 0.0;
  for (int rung = 0; rung <= 7; ++rung) {
    jitter = rung == 0 ? 0.0 : std::pow(10.0, rung - 11) * diag_scale;  // 1e-10 .. 1e-4
    Eigen::MatrixXd work = m;
    work.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(std::move(work));
    ++factorization_count();
    if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
  }
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  throw FactorizationError(min_eig, jitter);
}

}  // namespace detail

/// Fitted GP regression state: lower Cholesky factor of Psi = K + sigma_eps2 I
/// (plus any jitter) and the solves alpha = Psi^{-1} Y for all channels.
/// Immutable after fit; safe for concurrent predict calls.
struct Posterior {
  Eigen::MatrixXd chol_lower;
  Eigen::MatrixXd alpha;  // N x C
  double sigma_eps2 = 0.0;
  double jitter_used = 0.0;

  Eigen::Index n() const { return chol_lower.rows(); }
  Eigen::Index channels() const { return alpha.cols(); }
};

/// Predictive mean per output channel and the shared predictive variance
/// (output channels are independent, so the variance is common).
struct PosteriorPredictive {
  Eigen::VectorXd mean;
  double variance = 0.0;
};

/// Factorise Psi = K + sigma_eps2 I and solve for all target channels at once.
inline Posterior fit(const GramMatrix& gram, const Eigen::MatrixXd& targets, double sigma_eps2) {
  if (!(sigma_eps2 >= 0.0)) throw std::invalid_argument("sigma_eps2 must be nonnegative");
  if (!gram.values.allFinite()) throw std::invalid_argument("gram contains non-finite entries");
  if (!targets.allFinite()) throw std::invalid_argument("targets contain non-finite values");
  if (targets.rows() != gram.n()) throw std::invalid_argument("targets row count differs from gram");

  Eigen::MatrixXd psi = gram.values;
  psi.diagonal().array() += sigma_eps2;
  auto [lower, jitter] = detail::cholesky_with_jitter(psi);

  Posterior post;
  post.sigma_eps2 = sigma_eps2;
  post.jitter_used = jitter;
  post.alpha = lower.transpose().triangularView<Eigen::Upper>().solve(
      lower.triangularView<Eigen::Lower>().solve(targets));
  post.chol_lower = std::move(lower);
  return post;
}

/// Posterior predictive at one test point from its cross-covariances and
/// prior variance psi0 = k^L(x*, x*).
inline PosteriorPredictive predict(const Posterior& post, const Eigen::VectorXd& k_vec,
                                   double psi0) {
  if (k_vec.size() != post.n()) throw std::invalid_argument("cross vector length differs from fit");
  if (!(psi0 >= 0.0)) throw std::invalid_argument("psi0 must be nonnegative");

  PosteriorPredictive out;
  out.mean = post.alpha.transpose() * k_vec;
  const Eigen::VectorXd w = post.chol_lower.triangularView<Eigen::Lower>().solve(k_vec);
  const double prior_var = psi0 + post.sigma_eps2;
  double var = prior_var - w.squaredNorm();
  // rounding can push the subtraction slightly negative at large kernel scales
  if (var < 0.0) {
    if (var < -1e-8 * std::max(1.0, prior_var))
      throw std::runtime_error("predictive variance " + std::to_string(var) +
                               " negative beyond rounding tolerance");
    var = 0.0;
  }
  out.variance = var;
  return out;
}

/// Gaussian log marginal likelihood summed over channels, via the stored
/// factorisation.
inline double log_marginal_likelihood(const Posterior& post, const Eigen::MatrixXd& targets) {
  if (targets.rows() != post.n() || targets.cols() != post.channels())
    throw std::invalid_argument("targets shape differs from fitted posterior");
  const double n = static_cast<double>(post.n());
  const double c = static_cast<double>(post.channels());
  const double quad = (targets.array() * post.alpha.array()).sum();
  const double half_logdet = post.chol_lower.diagonal().array().log().sum();
  return -0.5 * quad - c * half_logdet - c * 0.5 * n * std::log(2.0 * M_PI);
}

/// Draw function samples from the zero-mean prior N(0, Gram): each row is
/// factor * z with z standard normal. Deterministic for a given seed.
inline Eigen::MatrixXd sample_prior(const GramMatrix& gram, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be positive");
  auto [lower, jitter] = detail::cholesky_with_jitter(gram.values);
  (void)jitter;
  const Eigen::Index n = gram.n();
  Rng rng(seed);
  Eigen::MatrixXd samples(n_samples, n);
  Eigen::VectorXd z(n);
  for (int s = 0; s < n_samples; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
    samples.row(s) = (lower.triangularView<Eigen::Lower>() * z).transpose();
  }
  return samples;
}

}  // namespace nngp
