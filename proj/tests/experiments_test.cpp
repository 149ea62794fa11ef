#include "nngp/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace nngp;

namespace {

/// small deterministic two-class problem: two well-separated direction
/// clusters on the unit-mean-square sphere
void make_blobs(int n, int dim, ClassData& out, std::uint64_t seed) {
  Rng rng(seed);
  out.inputs.resize(n, dim);
  out.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int cls = i % 2;
    Eigen::VectorXd v(dim);
    for (int d = 0; d < dim; ++d) v(d) = 0.25 * rng.normal();
    v(cls) += 2.0;  // cluster direction
    v *= std::sqrt(static_cast<double>(dim)) / v.norm();
    out.inputs.row(i) = v.transpose();
    out.labels[i] = cls;
  }
}

TEST(RunClassification, SeparableBlobsScoreHighAtCriticality) {
  ClassData train, test;
  make_blobs(60, 8, train, 1);
  make_blobs(40, 8, test, 2);
  KernelParams p{2.0 / 1.2, 0.0, NoiseSpec::multiplicative(1.2), 10};
  const ClassifyResult r = run_classification(train, test, p, 1e-6, 2, 2);
  EXPECT_GT(r.accuracy, 0.9);
  EXPECT_GT(r.frobenius_norm, 0.0);
  EXPECT_GT(r.mean_pred_variance, 0.0);
}

TEST(RunSweep, CanonicalOrderAndDeterminismAcrossThreadCounts) {
  ClassData train, test;
  make_blobs(30, 6, train, 3);
  make_blobs(20, 6, test, 4);
  SweepConfig cfg;
  cfg.sigma_w2_grid = {1.0, 1.5, 2.0};
  cfg.mu2_grid = {1.0, 1.5};
  cfg.depths = {5, 10};
  cfg.sigma_b2 = 0.0;
  cfg.sigma_eps2 = 1e-6;

  cfg.n_threads = 1;
  const auto serial = run_sweep(cfg, train, test, 2);
  cfg.n_threads = 4;
  const auto parallel = run_sweep(cfg, train, test, 2);

  ASSERT_EQ(serial.size(), 12u);
  ASSERT_EQ(parallel.size(), serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].depth, parallel[i].depth);
    EXPECT_EQ(serial[i].mu2, parallel[i].mu2);
    EXPECT_EQ(serial[i].sigma_w2, parallel[i].sigma_w2);
    EXPECT_EQ(serial[i].status, parallel[i].status);
    if (serial[i].status == CellStatus::OK) {
      EXPECT_EQ(serial[i].accuracy, parallel[i].accuracy) << i;
      EXPECT_EQ(serial[i].frobenius_norm, parallel[i].frobenius_norm) << i;
      EXPECT_EQ(serial[i].mean_pred_variance, parallel[i].mean_pred_variance) << i;
    }
  }
  // canonical (depth, mu2, sigma_w2) ordering
  EXPECT_EQ(serial[0].depth, 5);
  EXPECT_EQ(serial[0].mu2, 1.0);
  EXPECT_EQ(serial[0].sigma_w2, 1.0);
  EXPECT_EQ(serial[1].sigma_w2, 1.5);
  EXPECT_EQ(serial[3].mu2, 1.5);
  EXPECT_EQ(serial[6].depth, 10);
}

TEST(RunSweep, OverflowCellsAreRecordedNotFatal) {
  ClassData train, test;
  make_blobs(20, 6, train, 5);
  make_blobs(10, 6, test, 6);
  SweepConfig cfg;
  cfg.sigma_w2_grid = {1.0, 3.0};
  cfg.mu2_grid = {3.0};
  cfg.depths = {600};  // ratio 4.5 overflows, ratio 1.5 -> 1e105 stays finite
  cfg.sigma_b2 = 0.0;
  const auto cells = run_sweep(cfg, train, test, 2);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[1].status, CellStatus::Overflow);
  EXPECT_TRUE(std::isnan(cells[1].accuracy));
  // single-cell criticality never overflows
  SweepConfig crit;
  crit.sigma_w2_grid = {2.0 / 3.0};
  crit.mu2_grid = {3.0};
  crit.depths = {100};
  const auto ok = run_sweep(crit, train, test, 2);
  EXPECT_EQ(ok[0].status, CellStatus::OK);
  EXPECT_NEAR(ok[0].distance_to_critical, 0.0, 1e-15);
}

TEST(RunSweep, ValidatesConfig) {
  ClassData train, test;
  make_blobs(10, 4, train, 7);
  make_blobs(10, 4, test, 8);
  SweepConfig cfg;
  cfg.mu2_grid = {1.0};
  cfg.depths = {3};
  cfg.sigma_w2_grid = {};
  EXPECT_THROW(run_sweep(cfg, train, test, 2), std::invalid_argument);
  cfg.sigma_w2_grid = {2.0, 1.0};
  EXPECT_THROW(run_sweep(cfg, train, test, 2), std::invalid_argument);
}

TEST(DepthTrace, CriticalDiagonalIsFlatAndAsymptotesDropWithNoise) {
  Eigen::VectorXd x(4), y(4);
  x << 2.0, 0.0, 0.0, 0.0;
  y << 1.2, 1.6, 0.0, 0.0;  // both unit mean square
  std::vector<KernelParams> params;
  for (double mu2 : {1.25, 1.5, 2.0})
    params.push_back({2.0 / mu2, 0.0, NoiseSpec::multiplicative(mu2), 40});
  const auto traces = depth_trace(x, y, params);
  ASSERT_EQ(traces.size(), 3u);
  double prev_tail = 1e300;
  for (const auto& trace : traces) {
    ASSERT_EQ(trace.k_xx.size(), 41u);
    for (double v : trace.k_xx) EXPECT_NEAR(v, trace.k_xx.front(), 1e-10);
    const double tail = trace.k_xy.back();
    EXPECT_LT(tail, prev_tail);  // more noise, lower off-diagonal asymptote
    prev_tail = tail;
  }
}

TEST(DepthTrace, VanishingAndDivergentBehaviour) {
  Eigen::VectorXd x(4), y(4);
  x << 2.0, 0.0, 0.0, 0.0;
  y << 1.2, 1.6, 0.0, 0.0;
  KernelParams vanishing{0.8 * 2.0 / 1.5, 0.0, NoiseSpec::multiplicative(1.5), 200};
  KernelParams divergent{1.5, 0.0, NoiseSpec::multiplicative(1.5), 200};
  const auto traces = depth_trace(x, y, {vanishing, divergent});
  EXPECT_LT(traces[0].k_xx.back(), 1e-6);

  // closed form predicts the layer where the divergent trace crosses 1e6
  const auto& div = traces[1].k_xx;
  int predicted = -1;
  for (int l = 1; l <= 200; ++l) {
    KernelParams at_l = divergent;
    at_l.depth = l;
    if (closed_form_diag(div.front(), at_l) > 1e6) {
      predicted = l;
      break;
    }
  }
  ASSERT_GT(predicted, 0);
  EXPECT_LT(predicted, 200);
  ASSERT_EQ(div.size(), 201u);
  EXPECT_GT(div[predicted], 1e6);
  EXPECT_LE(div[predicted - 1], 1e6);
}

TEST(Pearson, KnownValuesAndErrors) {
  EXPECT_NEAR(pearson({1, 2, 3}, {6, 4, 2}), -1.0, 1e-12);
  EXPECT_NEAR(pearson({1, 2, 3, 4}, {1, 2, 3, 4}), 1.0, 1e-12);
  EXPECT_THROW(pearson({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(pearson({1}, {1}), std::invalid_argument);
}

TEST(UncertaintyCorrelation, PartitionsAndValidates) {
  std::vector<SweepCell> cells;
  // near cells: variance up, accuracy down -> perfect anticorrelation
  for (int i = 0; i < 4; ++i) {
    SweepCell c;
    c.status = CellStatus::OK;
    c.distance_to_critical = 0.01;
    c.mean_pred_variance = 1.0 + i;
    c.accuracy = 0.9 - 0.1 * i;
    cells.push_back(c);
  }
  // far cells: no relationship
  const double vars[] = {1.0, 2.0, 3.0, 4.0};
  const double accs[] = {0.5, 0.8, 0.2, 0.6};
  for (int i = 0; i < 4; ++i) {
    SweepCell c;
    c.status = CellStatus::OK;
    c.distance_to_critical = 0.5;
    c.mean_pred_variance = vars[i];
    c.accuracy = accs[i];
    cells.push_back(c);
  }
  const CorrelationSplit split = uncertainty_correlation(cells, 0.05);
  EXPECT_NEAR(split.corr_near, -1.0, 1e-12);
  EXPECT_LT(std::abs(split.corr_far), 0.5);
  EXPECT_EQ(split.n_near, 4);
  EXPECT_EQ(split.n_far, 4);

  // constant variance in a partition -> undefined correlation
  for (auto& c : cells)
    if (c.distance_to_critical < 0.05) c.mean_pred_variance = 2.0;
  EXPECT_THROW(uncertainty_correlation(cells, 0.05), std::invalid_argument);
  // too few cells
  cells.resize(5);
  EXPECT_THROW(uncertainty_correlation(cells, 0.05), std::invalid_argument);
}

TEST(Run1dDemo, NoiseDiagonalisesGramAndRegularisesFit) {
  std::vector<double> lattice;
  for (double v = -1.0; v <= 2.0 + 1e-12; v += 0.05) lattice.push_back(v);
  const auto bundles = run_1d_demo({1.0, 1.001, 2.0}, 0.05, 20, lattice, 20260809);
  ASSERT_EQ(bundles.size(), 3u);

  // (i) mean |offdiag| / diag ratio decreases monotonically in mu2
  double prev_ratio = 1e300;
  for (const auto& bundle : bundles) {
    const Eigen::MatrixXd& g = bundle.gram;
    double off = 0.0, diag = 0.0;
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      diag += g(i, i);
      for (Eigen::Index j = 0; j < g.cols(); ++j)
        if (i != j) off += std::abs(g(i, j));
    }
    const double ratio = (off / (g.rows() * (g.rows() - 1))) / (diag / g.rows());
    EXPECT_LT(ratio, prev_ratio) << "mu2 = " << bundle.mu2;
    prev_ratio = ratio;
  }

  // nearby lattice points share most of their covariance in the noiseless
  // kernel (banded structure)
  const Eigen::MatrixXd& g0 = bundles[0].gram;
  int banded = 0, checked = 0;
  for (Eigen::Index i = 0; i + 1 < g0.rows(); ++i) {
    ++checked;
    banded += g0(i, i + 1) > 0.5 * std::sqrt(g0(i, i) * g0(i + 1, i + 1));
  }
  EXPECT_GT(banded, checked * 9 / 10);

  // (ii) strong noise: near-zero mean and near-prior variance away from data
  const auto& noisy = bundles[2];
  int far_points = 0;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    double min_dist = 1e300;
    for (Eigen::Index t = 0; t < noisy.train_x.size(); ++t)
      min_dist = std::min(min_dist, std::abs(lattice[i] - noisy.train_x(t)));
    if (min_dist < 0.5) continue;
    ++far_points;
    EXPECT_LT(std::abs(noisy.fit_mean(i)), 0.2) << "x* = " << lattice[i];
    EXPECT_GT(noisy.fit_var(i), 0.8 * noisy.psi(i)) << "x* = " << lattice[i];
  }
  EXPECT_GE(far_points, 10);

  // prior samples are deterministic given the seed
  const auto again = run_1d_demo({2.0}, 0.05, 20, lattice, 20260809);
  EXPECT_EQ(again[0].prior_samples, bundles[2].prior_samples);
}

TEST(Run1dDemo, SinusoidFitInterpolatesNearTrainingPoints) {
  std::vector<double> lattice;
  for (double v = 0.0; v <= 1.0 + 1e-12; v += 0.05) lattice.push_back(v);
  const auto bundles = run_1d_demo({1.0}, 0.05, 20, lattice, 4);
  const auto& b = bundles[0];
  for (Eigen::Index t = 0; t < b.train_x.size(); ++t) {
    // find the nearest lattice point to this training input
    Eigen::Index best = 0;
    for (Eigen::Index i = 0; i < b.fit_mean.size(); ++i)
      if (std::abs(lattice[i] - b.train_x(t)) < std::abs(lattice[best] - b.train_x(t))) best = i;
    EXPECT_NEAR(b.fit_mean(best), b.train_y(t), 0.35) << "train point " << t;
  }
}

}  // namespace
