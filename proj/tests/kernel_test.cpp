#include "nngp/kernel.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_support.hpp"

using namespace nngp;

namespace {

// frozen against a 40-digit evaluation of the closed forms; the off-diagonal
// step value is additionally bracketed by the MC oracle in mc_test.cpp
constexpr double kG05 = 0.71799556208845872;
constexpr double kRhoG05 = 0.35899778104422936;
constexpr double kInvPi = 0.31830988618379067;
constexpr double kStep05 = 0.40449889052211468;

TEST(GRho, BoundaryAndKnownValues) {
  EXPECT_DOUBLE_EQ(g_rho(1.0), 0.5);
  EXPECT_DOUBLE_EQ(g_rho(-1.0), -0.5);
  EXPECT_NEAR(g_rho(0.5), kG05, 1e-15);
  EXPECT_NEAR(rho_g(0.0), kInvPi, 1e-16);
  EXPECT_NEAR(rho_g(0.5), kRhoG05, 1e-15);
  EXPECT_NEAR(rho_g(-1.0), 0.5, 1e-16);  // (-1) asin(-1) = pi/2
  EXPECT_NEAR(rho_g(1.0), 0.5, 1e-16);
}

TEST(GRho, ClampsRoundingButRejectsGarbage) {
  EXPECT_DOUBLE_EQ(rho_g(1.0 + 5e-10), 0.5);
  EXPECT_DOUBLE_EQ(rho_g(-1.0 - 5e-10), 0.5);
  EXPECT_THROW(rho_g(1.0 + 1e-8), std::domain_error);
  EXPECT_THROW(g_rho(0.0), std::domain_error);
}

TEST(GRho, LipschitzOnWholeInterval) {
  // d(rho_g)/d(rho) = asin(rho)/pi, bounded by 1/2: no blow-up near 0
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double a = -1.0 + 2.0 * i / 2000.0;
    const double b = a + 2.0 / 2000.0;
    worst = std::max(worst, std::abs(rho_g(b) - rho_g(a)) / (b - a));
  }
  EXPECT_LE(worst, 0.5 + 1e-6);
}

TEST(BaseKernel, MultiplicativeSelf) {
  std::vector<double> x{1.0, 1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(base_kernel_self(x, NoiseSpec::multiplicative(2.0)), 2.0);
}

TEST(BaseKernel, OrthogonalInputsGiveZero) {
  std::vector<double> x{1.0, 0.0}, y{0.0, 1.0};
  EXPECT_DOUBLE_EQ(base_kernel_cross(x, y), 0.0);
  EXPECT_DOUBLE_EQ(base_kernel(x, y, NoiseSpec::additive(3.0)), 0.0);
}

TEST(BaseKernel, AdditiveSelf) {
  // MC-verified: E[(x+e).(x+e)]/D = |x|^2/D + mu2
  std::vector<double> x{2.0, 0.0};
  EXPECT_DOUBLE_EQ(base_kernel_self(x, NoiseSpec::additive(0.5)), 2.5);
}

TEST(BaseKernel, DimensionMismatchThrows) {
  std::vector<double> x{1.0, 2.0}, y{1.0};
  EXPECT_THROW(base_kernel_cross(x, y), std::invalid_argument);
}

TEST(BaseKernel, DispatcherDetectsIdenticalValues) {
  std::vector<double> x{0.5, -0.5}, same{0.5, -0.5};
  const NoiseSpec mult = NoiseSpec::multiplicative(2.0);
  EXPECT_DOUBLE_EQ(base_kernel(x, same, mult), 2.0 * 0.25);
  std::vector<double> other{0.5, -0.5 + 1e-12};
  EXPECT_NEAR(base_kernel(x, other, mult), 0.25, 1e-9);  // cross: no mu2 factor
}

TEST(StepDiag, CriticalFixedPoint) {
  for (double mu2 : {1.0, 1.3, 2.0, 7.5}) {
    KernelParams p{2.0 / mu2, 0.0, NoiseSpec::multiplicative(mu2), 1};
    EXPECT_NEAR(step_diag(1.0, p), 1.0, 1e-15) << "mu2 = " << mu2;
  }
}

TEST(StepDiag, MultiplicativeExample) {
  KernelParams p{1.5, 0.0, NoiseSpec::multiplicative(1.5), 1};
  EXPECT_DOUBLE_EQ(step_diag(1.0, p), 1.125);
}

TEST(StepDiag, AdditiveMatchesClosedFormConvention) {
  // one step must equal the L=1 closed form (ratio^1 k + (mu2 + sb2))
  KernelParams p{1.0, 0.1, NoiseSpec::additive(0.5), 1};
  EXPECT_DOUBLE_EQ(step_diag(2.0, p), 0.5 * 2.0 + 0.5 + 0.1);
  EXPECT_DOUBLE_EQ(step_diag(2.0, p), closed_form_diag(2.0, p));
}

TEST(StepDiag, RejectsNegativeVariance) {
  KernelParams p{2.0, 0.0, NoiseSpec::none(), 1};
  EXPECT_THROW(step_diag(-0.1, p), std::invalid_argument);
}

TEST(StepOffdiag, PerfectCorrelationMatchesNoiselessDiagonal) {
  KernelParams p{2.0, 0.0, NoiseSpec::none(), 1};
  KernelState s{1.0, 1.0, 1.0, 0};
  EXPECT_NEAR(step_offdiag(s, p), 1.0, 1e-15);
}

TEST(StepOffdiag, ZeroCorrelation) {
  KernelParams p{2.0, 0.0, NoiseSpec::none(), 1};
  KernelState s{1.0, 1.0, 0.0, 0};
  EXPECT_NEAR(step_offdiag(s, p), kInvPi, 1e-15);
}

TEST(StepOffdiag, FrozenMidCorrelationValue) {
  KernelParams p{1.0, 0.1, NoiseSpec::none(), 1};
  KernelState s{1.0, 1.0, 0.5, 0};
  EXPECT_NEAR(step_offdiag(s, p), kStep05, 1e-15);
}

TEST(StepOffdiag, ZeroVarianceDegeneratesToBias) {
  KernelParams p{2.0, 0.07, NoiseSpec::multiplicative(1.5), 1};
  KernelState s{0.0, 1.0, 0.0, 0};
  EXPECT_DOUBLE_EQ(step_offdiag(s, p), 0.07);
}

TEST(StepOffdiag, CauchySchwarzViolationThrows) {
  KernelParams p{2.0, 0.0, NoiseSpec::none(), 1};
  KernelState s{1.0, 1.0, 1.5, 0};
  EXPECT_THROW(step_offdiag(s, p), std::invalid_argument);
}

TEST(StepOffdiag, NoiseNeverEntersOffdiagonal) {
  KernelState s{1.0, 1.0, 0.5, 0};
  KernelParams none{1.4, 0.2, NoiseSpec::none(), 1};
  KernelParams mult{1.4, 0.2, NoiseSpec::multiplicative(3.0), 1};
  KernelParams add{1.4, 0.2, NoiseSpec::additive(2.0), 1};
  EXPECT_DOUBLE_EQ(step_offdiag(s, none), step_offdiag(s, mult));
  EXPECT_DOUBLE_EQ(step_offdiag(s, none), step_offdiag(s, add));
}

TEST(ClosedFormDiag, BiasGrowthAtCriticality) {
  // 20 layers at criticality with sigma_b2 = 0.05 add exactly +1
  for (double mu2 : {1.0, 1.5, 2.0}) {
    KernelParams p{2.0 / mu2, 0.05, NoiseSpec::multiplicative(mu2), 20};
    EXPECT_NEAR(closed_form_diag(1.0, p), 2.0, 1e-12) << "mu2 = " << mu2;
  }
}

TEST(ClosedFormDiag, MultiplicativeGrowthExample) {
  KernelParams p{1.5, 0.0, NoiseSpec::multiplicative(1.5), 20};
  EXPECT_NEAR(closed_form_diag(1.0, p), 10.5450938424492, 1e-10);
  EXPECT_NEAR(closed_form_diag(1.0, p), test::iterate_diag(1.0, p), 1e-12 * 10.5);
}

TEST(ClosedFormDiag, AdditiveGeometricLimit) {
  KernelParams p{1.0, 0.1, NoiseSpec::additive(0.5), 200};
  EXPECT_NEAR(closed_form_diag(1.0, p), 1.2, 1e-10);
  EXPECT_NEAR(test::iterate_diag(1.0, p), 1.2, 1e-10);
}

TEST(ClosedFormDiag, EquivalenceWithIterationOnRandomConfigs) {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    KernelParams p;
    p.sigma_w2 = 0.1 + 2.9 * rng.uniform();
    p.sigma_b2 = rng.uniform();
    p.depth = 1 + static_cast<int>(rng.uniform() * 50);
    if (rng.uniform() < 0.5) {
      p.noise = NoiseSpec::additive(3.0 * rng.uniform());
    } else {
      p.noise = NoiseSpec::multiplicative(1.0 + 2.0 * rng.uniform());
    }
    const double k0 = 2.0 * rng.uniform();
    const double closed = closed_form_diag(k0, p);
    const double iterated = test::iterate_diag(k0, p);
    EXPECT_NEAR(closed, iterated, 1e-9 * std::max(1.0, std::abs(iterated)))
        << "sw2=" << p.sigma_w2 << " sb2=" << p.sigma_b2 << " noise=" << p.noise.describe()
        << " L=" << p.depth;
  }
}

TEST(ClassifyRegime, PinnedTableExamples) {
  {
    KernelParams p{1.0, 0.0, NoiseSpec::multiplicative(2.0), 1};
    const RegimeLabel label = classify_regime(p);
    EXPECT_EQ(label.kind, RegimeKind::FixedPreserving);
    EXPECT_EQ(label.table_case, TableCase::M5);
  }
  {
    KernelParams p{1.5, 0.0, NoiseSpec::multiplicative(2.0), 1};
    const RegimeLabel label = classify_regime(p);
    EXPECT_EQ(label.kind, RegimeKind::Divergent);
    EXPECT_EQ(label.table_case, TableCase::M3);
  }
  {
    KernelParams p{1.0, 0.1, NoiseSpec::additive(0.5), 1};
    const RegimeLabel label = classify_regime(p);
    EXPECT_EQ(label.kind, RegimeKind::ConstantLimit);
    EXPECT_EQ(label.table_case, TableCase::A1);
    EXPECT_NEAR(label.limit_value, 1.2, 1e-14);
  }
}

TEST(ClassifyRegime, FullTaxonomy) {
  auto label_of = [](double sw2, double sb2, NoiseSpec noise) {
    return classify_regime(KernelParams{sw2, sb2, noise, 1});
  };
  EXPECT_EQ(label_of(2.0, 0.5, NoiseSpec::additive(1.0)).table_case, TableCase::A2);
  EXPECT_EQ(label_of(2.5, 0.0, NoiseSpec::additive(1.0)).table_case, TableCase::A2);
  EXPECT_EQ(label_of(0.5, 0.0, NoiseSpec::multiplicative(2.0)).table_case, TableCase::M1);
  EXPECT_EQ(label_of(0.5, 0.2, NoiseSpec::multiplicative(2.0)).table_case, TableCase::M2);
  EXPECT_EQ(label_of(1.0, 0.2, NoiseSpec::multiplicative(2.0)).table_case, TableCase::M4);
  EXPECT_EQ(label_of(1.9, 0.0, NoiseSpec::none()).table_case, TableCase::NoiselessOrdered);
  EXPECT_EQ(label_of(1.9, 0.0, NoiseSpec::none()).kind, RegimeKind::Vanishing);
  EXPECT_EQ(label_of(1.9, 0.3, NoiseSpec::none()).kind, RegimeKind::ConstantLimit);
  EXPECT_EQ(label_of(2.0, 0.0, NoiseSpec::none()).kind, RegimeKind::FixedPreserving);
  EXPECT_EQ(label_of(2.0, 0.1, NoiseSpec::none()).kind, RegimeKind::Divergent);
  EXPECT_EQ(label_of(2.3, 0.0, NoiseSpec::none()).table_case, TableCase::NoiselessDivergent);
  // mu2 = 1 multiplicative and mu2 = 0 additive behave as noiseless
  EXPECT_EQ(label_of(2.0, 0.0, NoiseSpec::multiplicative(1.0)).kind, RegimeKind::FixedPreserving);
  EXPECT_EQ(label_of(2.0, 0.0, NoiseSpec::additive(0.0)).kind, RegimeKind::FixedPreserving);
}

TEST(ClassifyRegime, BoundaryToleranceSurvivesDecimalRoundTrips) {
  const double crit = 2.0 / 1.7;
  EXPECT_EQ(classify_regime({crit * (1.0 + 1e-13), 0.0, NoiseSpec::multiplicative(1.7), 1}).kind,
            RegimeKind::FixedPreserving);
  EXPECT_EQ(classify_regime({crit * (1.0 + 1e-9), 0.0, NoiseSpec::multiplicative(1.7), 1}).kind,
            RegimeKind::Divergent);
  EXPECT_EQ(classify_regime({crit * (1.0 - 1e-9), 0.0, NoiseSpec::multiplicative(1.7), 1}).kind,
            RegimeKind::Vanishing);
}

TEST(CriticalParams, KnownValues) {
  EXPECT_EQ(critical_params(NoiseSpec::none()), (std::pair<double, double>{2.0, 0.0}));
  EXPECT_EQ(critical_params(NoiseSpec::dropout(0.8)), (std::pair<double, double>{1.6, 0.0}));
  EXPECT_EQ(critical_params(NoiseSpec::multiplicative(2.0)), (std::pair<double, double>{1.0, 0.0}));
  EXPECT_THROW(critical_params(NoiseSpec::additive(0.5)), std::invalid_argument);
}

TEST(Invariants, CriticalFixedPointHoldsFor1000Layers) {
  for (double mu2 : {1.0, 1.25, 1.5, 2.0}) {
    for (double k0 : {0.25, 1.0, 3.5}) {
      KernelParams p{2.0 / mu2, 0.0, NoiseSpec::multiplicative(mu2), 1000};
      const double k = test::iterate_diag(k0, p);
      EXPECT_NEAR(k, k0, 1e-10 * k0) << "mu2=" << mu2 << " k0=" << k0;
    }
  }
}

TEST(Invariants, RegimeMatchesDeepIterationNumerically) {
  Rng rng(7);
  const TableCase rows[] = {TableCase::A1, TableCase::A2, TableCase::M1, TableCase::M2,
                            TableCase::M3, TableCase::M4, TableCase::M5};
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const TableCase row = rows[trial % 7];
    const KernelParams p = test::draw_regime_params(rng, row);
    const double k0 = 0.1 + 2.0 * rng.uniform();
    const std::string msg = test::check_regime_consistency(p, k0);
    EXPECT_TRUE(msg.empty()) << to_string(row) << ": " << msg;
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(Invariants, OffdiagonalMapStrictlyIncreasingAtCriticality) {
  for (double mu2 : {1.0, 1.5, 3.0}) {
    KernelParams p{2.0 / mu2, 0.0, NoiseSpec::multiplicative(mu2), 1};
    double prev = -1e300;
    for (int i = 0; i <= 200; ++i) {
      const double k_xy = -0.999 + 1.998 * i / 200.0;
      const double next = step_offdiag({1.0, 1.0, k_xy, 0}, p);
      EXPECT_GT(next, prev) << "mu2=" << mu2 << " k_xy=" << k_xy;
      prev = next;
    }
  }
}

TEST(Invariants, EquilibriumOffdiagonalNonIncreasingInNoise) {
  // at criticality the diagonal is pinned at 1, so iterate the off-diagonal
  // map to equilibrium and compare across mu2
  double prev_equilibrium = 1.0;
  for (double mu2 : {1.0, 1.25, 1.5, 2.0, 4.0, 100.0, 1e4}) {
    KernelParams p{2.0 / mu2, 0.0, NoiseSpec::multiplicative(mu2), 1};
    double k_xy = 0.6;
    for (int l = 0; l < 4000; ++l) k_xy = step_offdiag({1.0, 1.0, k_xy, 0}, p);
    EXPECT_LE(k_xy, prev_equilibrium + 1e-12) << "mu2=" << mu2;
    prev_equilibrium = k_xy;
  }
  EXPECT_LT(prev_equilibrium, 1e-3);  // k(x,x') -> 0 as mu2 -> infinity
}

TEST(Invariants, OneStepPreservesCauchySchwarz) {
  Rng rng(99);
  for (int trial = 0; trial < 10000; ++trial) {
    KernelState s;
    s.k_xx = 2.0 * rng.uniform();
    s.k_yy = 2.0 * rng.uniform();
    const double bound = std::sqrt(s.k_xx * s.k_yy);
    s.k_xy = bound * (2.0 * rng.uniform() - 1.0);
    KernelParams p;
    p.sigma_w2 = 0.1 + 2.9 * rng.uniform();
    p.sigma_b2 = rng.uniform();
    p.noise = rng.uniform() < 0.5 ? NoiseSpec::additive(2.0 * rng.uniform())
                                  : NoiseSpec::multiplicative(1.0 + 2.0 * rng.uniform());
    const KernelState next = step_state(s, p);
    EXPECT_LE(std::abs(next.k_xy), std::sqrt(next.k_xx * next.k_yy) + 1e-12)
        << "trial " << trial;
    EXPECT_EQ(next.layer, s.layer + 1);
  }
}

}  // namespace
