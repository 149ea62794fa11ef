#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nngp/data_io.hpp"
#include "nngp/dataset.hpp"
#include "nngp/gp.hpp"
#include "nngp/gram.hpp"
#include "nngp/kernel.hpp"
#include "nngp/parallel.hpp"
#include "nngp/task.hpp"

namespace nngp {

struct SweepConfig {
  std::vector<double> sigma_w2_grid;
  std::vector<double> mu2_grid;
  double sigma_b2 = 0.0;
  std::vector<int> depths;
  NoiseMode noise_mode = NoiseMode::Multiplicative;
  double sigma_eps2 = 1e-6;
  int n_threads = 0;
  std::uint64_t seed = 0;
  // metadata echoed into result files
  std::string dataset_name;
  std::string normalization_name;
  int n_train = 0;
  int n_test = 0;

  void validate() const {
    auto check_grid = [](const std::vector<double>& g, const char* name) {
      if (g.empty()) throw std::invalid_argument(std::string(name) + " grid is empty");
      for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1]))
          throw std::invalid_argument(std::string(name) + " grid must be strictly increasing");
    };
    check_grid(sigma_w2_grid, "sigma_w2");
    check_grid(mu2_grid, "mu2");
    if (depths.empty()) throw std::invalid_argument("depths list is empty");
    for (int d : depths)
      if (d < 1) throw std::invalid_argument("depths must be positive");
    if (!(sigma_b2 >= 0.0)) throw std::invalid_argument("sigma_b2 must be nonnegative");
    if (!(sigma_eps2 >= 0.0)) throw std::invalid_argument("sigma_eps2 must be nonnegative");
  }
};

enum class CellStatus { OK, Overflow, FactorFail };

inline const char* to_string(CellStatus s) {
  switch (s) {
    case CellStatus::OK: return "OK";
    case CellStatus::Overflow: return "Overflow";
    case CellStatus::FactorFail: return "FactorFail";
  }
  return "?";
}

/// One grid point of the parameter sweep; metrics are NaN unless status OK.
struct SweepCell {
  int depth = 0;
  double mu2 = 1.0;
  double sigma_w2 = 2.0;
  double sigma_b2 = 0.0;
  CellStatus status = CellStatus::OK;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double frobenius_norm = std::numeric_limits<double>::quiet_NaN();
  double mean_pred_variance = std::numeric_limits<double>::quiet_NaN();
  double distance_to_critical = 0.0;
};

/// Labelled inputs ready for a classification run.
struct ClassData {
  Eigen::MatrixXd inputs;
  std::vector<int> labels;
};

/// Metrics of a single classification configuration.
struct ClassifyResult {
  double accuracy = 0.0;
  double mean_pred_variance = 0.0;
  double frobenius_norm = 0.0;
  double log_marginal = 0.0;
  double jitter_used = 0.0;
};

/// Fit one configuration and score the test set.
inline ClassifyResult run_classification(const ClassData& train, const ClassData& test,
                                         const KernelParams& params, double sigma_eps2,
                                         int num_classes, int n_threads = 1) {
  Dataset train_set{train.inputs, {}, {}};
  const ClassTargets targets = encode_labels(train.labels, num_classes);

  const GramMatrix gram = build_train_gram(train_set, params, {}, n_threads);
  const Posterior post = fit(gram, targets.encoded, sigma_eps2);

  const Eigen::Index n_test = test.inputs.rows();
  std::vector<int> predicted(n_test);
  std::vector<PosteriorPredictive> preds(n_test);
  parallel_for_blocks(static_cast<std::size_t>(n_test), n_threads,
                      [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t t = begin; t < end; ++t) {
      auto [k_vec, psi0] = build_cross_vector(train_set, test.inputs.row(t).transpose(), params);
      preds[t] = predict(post, k_vec, psi0);
      predicted[t] = decode_prediction(preds[t].mean);
    }
  });

  ClassifyResult out;
  out.accuracy = accuracy(predicted, test.labels);
  out.mean_pred_variance = mean_predictive_variance(preds);
  out.frobenius_norm = frobenius_norm(gram);
  out.log_marginal = log_marginal_likelihood(post, targets.encoded);
  out.jitter_used = post.jitter_used;
  return out;
}

/// Run the full (depth x mu2 x sigma_w2) grid. Cells are independent work
/// units; numeric failures are recorded in the cell status rather than
/// aborting the sweep. Output order is canonical (depth, mu2, sigma_w2)
/// regardless of the worker schedule.
inline std::vector<SweepCell> run_sweep(const SweepConfig& cfg, const ClassData& train,
                                        const ClassData& test, int num_classes) {
  cfg.validate();
  if (train.inputs.rows() < 1 || test.inputs.rows() < 1)
    throw std::invalid_argument("sweep needs nonempty train and test sets");

  std::vector<SweepCell> cells;
  for (int depth : cfg.depths)
    for (double mu2 : cfg.mu2_grid)
      for (double sw2 : cfg.sigma_w2_grid) {
        SweepCell cell;
        cell.depth = depth;
        cell.mu2 = mu2;
        cell.sigma_w2 = sw2;
        cell.sigma_b2 = cfg.sigma_b2;
        const double mu2_eff = cfg.noise_mode == NoiseMode::Multiplicative ? mu2 : 1.0;
        cell.distance_to_critical = std::abs(sw2 - 2.0 / mu2_eff);
        cells.push_back(cell);
      }

  parallel_for_blocks(cells.size(), cfg.n_threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t c = begin; c < end; ++c) {
      SweepCell& cell = cells[c];
      NoiseSpec noise;
      noise.mode = cfg.noise_mode;
      noise.mu2 = cell.mu2;
      KernelParams params{cell.sigma_w2, cell.sigma_b2, noise, cell.depth};
      try {
        const ClassifyResult r =
            run_classification(train, test, params, cfg.sigma_eps2, num_classes, 1);
        cell.accuracy = r.accuracy;
        cell.frobenius_norm = r.frobenius_norm;
        cell.mean_pred_variance = r.mean_pred_variance;
        cell.status = CellStatus::OK;
      } catch (const GramOverflowError&) {
        cell.status = CellStatus::Overflow;
      } catch (const FactorizationError&) {
        cell.status = CellStatus::FactorFail;
      }
    }
  });
  return cells;
}

/// Per-layer kernel series for one input pair under one parameter setting.
struct DepthTrace {
  KernelParams params;
  std::vector<double> k_xx;  // l = 0..L (stops early on overflow)
  std::vector<double> k_xy;
};

/// Depth evolution of k^l(x,x) and k^l(x,x') for each parameter setting.
/// Divergent traces are reported up to the layer before overflow.
inline std::vector<DepthTrace> depth_trace(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                           const std::vector<KernelParams>& params_list) {
  if (x.size() != y.size() || x.size() < 1)
    throw std::invalid_argument("depth_trace: invalid input pair");
  std::vector<DepthTrace> traces;
  traces.reserve(params_list.size());
  for (const auto& params : params_list) {
    params.validate();
    DepthTrace trace;
    trace.params = params;
    std::vector<double> xs(x.begin(), x.end());
    std::vector<double> ys(y.begin(), y.end());
    KernelState state;
    state.k_xx = base_kernel_self(xs, params.noise);
    state.k_yy = base_kernel_self(ys, params.noise);
    state.k_xy = base_kernel_cross(xs, ys);
    trace.k_xx.push_back(state.k_xx);
    trace.k_xy.push_back(state.k_xy);
    for (int l = 1; l <= params.depth; ++l) {
      state = step_state(state, params);
      if (!std::isfinite(state.k_xx) || !std::isfinite(state.k_xy)) break;
      trace.k_xx.push_back(state.k_xx);
      trace.k_xy.push_back(state.k_xy);
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

/// Pearson correlation; throws if either side has zero variance.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("pearson: need two equal-length series of size >= 2");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("pearson: zero variance makes the correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

struct CorrelationSplit {
  double corr_near = 0.0;
  double corr_far = 0.0;
  int n_near = 0;
  int n_far = 0;
};

/// Correlation of (mean predictive variance, accuracy) within the partitions
/// near / far of criticality by |sigma_w2 - 2/mu2| <= near_threshold.
inline CorrelationSplit uncertainty_correlation(const std::vector<SweepCell>& cells,
                                                double near_threshold) {
  std::vector<double> var_near, acc_near, var_far, acc_far;
  for (const auto& cell : cells) {
    if (cell.status != CellStatus::OK) continue;
    if (cell.distance_to_critical <= near_threshold) {
      var_near.push_back(cell.mean_pred_variance);
      acc_near.push_back(cell.accuracy);
    } else {
      var_far.push_back(cell.mean_pred_variance);
      acc_far.push_back(cell.accuracy);
    }
  }
  if (var_near.size() < 3 || var_far.size() < 3)
    throw std::invalid_argument("uncertainty_correlation: need at least 3 OK cells per partition (near=" +
                                std::to_string(var_near.size()) + ", far=" +
                                std::to_string(var_far.size()) + ")");
  CorrelationSplit split;
  split.corr_near = pearson(var_near, acc_near);
  split.corr_far = pearson(var_far, acc_far);
  split.n_near = static_cast<int>(var_near.size());
  split.n_far = static_cast<int>(var_far.size());
  return split;
}

/// Everything needed to draw one column of the 1-D demo: prior samples over
/// the lattice, the lattice Gram, and the posterior fit from the sinusoid
/// training points.
struct DemoBundle {
  double mu2 = 1.0;
  double sigma_w2 = 2.0;
  Eigen::MatrixXd prior_samples;  // n_samples x G
  Eigen::MatrixXd gram;           // G x G
  Eigen::VectorXd fit_mean;       // G
  Eigen::VectorXd fit_var;        // G
  Eigen::VectorXd psi;            // G, prior variance psi0 + sigma_eps2
  Eigen::VectorXd train_x;
  Eigen::VectorXd train_y;
};

struct Demo1dOptions {
  int n_train = 4;
  double train_lo = 0.0;
  double train_hi = 1.0;
  double noise_sd = 0.1;      // observation noise on the sinusoid targets
  double sigma_eps2 = 0.01;   // regression noise used by the fit
  int n_prior_samples = 5;
};

/// The 1-D sinusoid demo at critical sigma_w2 = 2/mu2 for each mu2.
inline std::vector<DemoBundle> run_1d_demo(const std::vector<double>& mu2_list, double sigma_b2,
                                           int depth, const std::vector<double>& lattice,
                                           std::uint64_t seed, const Demo1dOptions& opts = {}) {
  if (lattice.empty()) throw std::invalid_argument("run_1d_demo: empty lattice");
  if (mu2_list.empty()) throw std::invalid_argument("run_1d_demo: empty mu2 list");

  const Dataset train =
      make_sinusoid(opts.n_train, opts.train_lo, opts.train_hi, opts.noise_sd, seed);
  Dataset lattice_set;
  lattice_set.inputs.resize(static_cast<Eigen::Index>(lattice.size()), 1);
  for (std::size_t i = 0; i < lattice.size(); ++i) lattice_set.inputs(i, 0) = lattice[i];
  lattice_set.row_ids = Dataset::default_ids(lattice_set.n());

  std::vector<DemoBundle> bundles;
  for (double mu2 : mu2_list) {
    const NoiseSpec noise = NoiseSpec::multiplicative(mu2);
    const auto [sw2, crit_sb2] = critical_params(noise);
    (void)crit_sb2;
    KernelParams params{sw2, sigma_b2, noise, depth};

    DemoBundle bundle;
    bundle.mu2 = mu2;
    bundle.sigma_w2 = sw2;
    bundle.train_x = train.inputs.col(0);
    bundle.train_y = train.targets.col(0);

    const GramMatrix lattice_gram = build_train_gram(lattice_set, params);
    bundle.gram = lattice_gram.values;
    bundle.prior_samples = sample_prior(lattice_gram, opts.n_prior_samples, seed + 1);

    const GramMatrix train_gram = build_train_gram(train, params);
    const Posterior post = fit(train_gram, train.targets, opts.sigma_eps2);

    const Eigen::Index g = lattice_set.n();
    bundle.fit_mean.resize(g);
    bundle.fit_var.resize(g);
    bundle.psi.resize(g);
    for (Eigen::Index i = 0; i < g; ++i) {
      auto [k_vec, psi0] = build_cross_vector(train, lattice_set.inputs.row(i).transpose(), params);
      const PosteriorPredictive pred = predict(post, k_vec, psi0);
      bundle.fit_mean(i) = pred.mean(0);
      bundle.fit_var(i) = pred.variance;
      bundle.psi(i) = psi0 + opts.sigma_eps2;
    }
    bundles.push_back(std::move(bundle));
  }
  return bundles;
}

}  // namespace nngp
