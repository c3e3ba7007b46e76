#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "generators.hpp"
#include "perimeter/errors.hpp"
#include "perimeter/mfd.hpp"

using namespace perimeter;

namespace {

constexpr double kA = 1.4877e-7;
constexpr double kB = -2.9815e-3;
constexpr double kC = 15.0912;

MfdSpec inner() { return MfdSpec::cubic(kA, kB, kC, 10000.0); }

double poly(double n) { return (kA * n * n * n + kB * n * n + kC * n) / 3600.0; }

// Stationary point of the cubic from the quadratic formula.
double crit_oracle(double a, double b, double c) {
  return (-2.0 * b - std::sqrt(4.0 * b * b - 12.0 * a * c)) / (6.0 * a);
}

MfdSpec default_cuts(double lambda) { return MfdSpec::smoothed_cuts(2.6e-3, 6.4, 1e-3, 10000.0, lambda); }

double max_slope(const MfdSpec& s) {
  double m = 0.0;
  for (int i = 0; i <= 1000; ++i) m = std::max(m, std::abs(s.slope(s.n_cap() * i / 1000.0)));
  return m;
}

}  // namespace

TEST(Mfd, CubicVanishesAtZero) { EXPECT_EQ(completion_rate(inner(), 0.0), 0.0); }

TEST(Mfd, CubicMatchesPolynomialNearCritical) {
  EXPECT_NEAR(completion_rate(inner(), 3400.0), poly(3400.0), 1e-6 * poly(3400.0));
  EXPECT_NEAR(completion_rate(inner(), 3400.0), 6.3, 0.05);
  EXPECT_NEAR(completion_rate(inner(), 1000.0), poly(1000.0), 1e-12);
}

TEST(Mfd, CriticalAccumulationMatchesQuadraticFormula) {
  const double oracle = crit_oracle(kA, kB, kC);
  EXPECT_NEAR(oracle, 3392.0, 1.0);
  EXPECT_NEAR(critical_accumulation(inner()), oracle, 0.1);
  EXPECT_NEAR(inner().n_crit(), oracle, 0.1);
}

TEST(Mfd, OuterRegionScalesCritical) {
  const MfdSpec outer = inner().rescaled(2.0, 1.5);
  // Coefficients of G(n/2): a/8, b/4, c/2.
  const double oracle = crit_oracle(kA / 8.0, kB / 4.0, kC / 2.0);
  EXPECT_NEAR(oracle, 6784.0, 2.0);
  EXPECT_NEAR(critical_accumulation(outer), oracle, 0.1);
  EXPECT_NEAR(outer.max_flow(), 1.5 * inner().max_flow(), 1e-9);
}

TEST(Mfd, JamAndClamping) {
  const MfdSpec s = inner();
  EXPECT_DOUBLE_EQ(s.n_cap(), 10000.0);
  EXPECT_NEAR(completion_rate(s, 10000.0), 0.0, 1e-9);
  EXPECT_EQ(completion_rate(s, 12000.0), 0.0);
  EXPECT_THROW(completion_rate(s, -1.0), DomainError);
  EXPECT_GT(s.n_crit(), 0.0);
  EXPECT_LT(s.n_crit(), s.n_cap());
}

TEST(Mfd, NonNegativeAndUnimodal) {
  std::vector<MfdSpec> specs{inner(), inner().rescaled(2.0, 1.5), apply_speed_drop(inner(), 0.25),
                             apply_capacity_drop(inner(), 0.25)};
  for (double l : {0.03, 0.05, 0.07, 0.095, 0.12}) specs.push_back(default_cuts(l));
  for (const auto& s : specs) {
    for (int i = 0; i <= 2000; ++i) EXPECT_GE(completion_rate(s, s.n_cap() * i / 2000.0), 0.0);
    EXPECT_EQ(slope_sign_changes(s), 1);
  }
}

TEST(Mfd, SlopeIsContinuous) {
  const double h = 1e-4;
  for (const auto& s : {inner(), default_cuts(0.095), apply_capacity_drop(inner(), 0.2)}) {
    const double tol = 1e-6 * max_slope(s);
    for (int i = 1; i < 1000; ++i) {
      const double n = s.n_cap() * i / 1000.0;
      const double left = (s.flow(n) - s.flow(n - h)) / h;
      const double right = (s.flow(n + h) - s.flow(n)) / h;
      ASSERT_LE(std::abs(left - right), tol) << "n=" << n;
    }
  }
}

TEST(Mfd, TaperJoinIsSmooth) {
  const MfdSpec s = inner();
  const double c = crit_oracle(kA, kB, kC);
  EXPECT_NEAR(s.slope(c - 1e-3), s.slope(c + 1e-3), 1e-8);
}

TEST(Mfd, CutsApproachMinimumOfCuts) {
  const double vf = 2.6e-3, cap = 6.4, w = 1e-3, nj = 10000.0;
  for (double n : {200.0, 1000.0, 2000.0}) {
    const double oracle = std::min({vf * n, cap, w * (nj - n)});
    EXPECT_NEAR(smoothed_cuts_flow(vf, cap, w, nj, 1e-4, n), oracle, 1e-3 * oracle);
  }
}

TEST(Mfd, CutsVanishAtZero) {
  const MfdSpec s = default_cuts(0.095);
  EXPECT_LE(std::abs(s.flow(0.0)), 1e-6 * s.flow(s.n_crit()));
}

TEST(Mfd, SymmetricTriangleArgmax) {
  // Free-flow and backward-wave cuts meet exactly at capacity.
  const double v = 1e-3, nj = 10000.0, cap = v * nj / 2.0;
  const MfdSpec s = MfdSpec::smoothed_cuts(v, cap, v, nj, 0.01);
  EXPECT_NEAR(critical_accumulation(s), cap / v, 0.1);
}

TEST(Mfd, CutsFlowDecreasesWithLambda) {
  prop::Gen g(7);
  for (int i = 0; i < 2000; ++i) {
    const double l1 = g.uniform(0.01, 0.2);
    const double l2 = l1 + g.uniform(1e-6, 0.1);
    const double n = g.uniform(0.0, 10000.0);
    ASSERT_GE(smoothed_cuts_flow(2.6e-3, 6.4, 1e-3, 1e4, l1, n),
              smoothed_cuts_flow(2.6e-3, 6.4, 1e-3, 1e4, l2, n));
  }
}

TEST(Mfd, CutsRejectNonPositiveLambda) {
  EXPECT_THROW(smoothed_cuts_flow(2.6e-3, 6.4, 1e-3, 1e4, 0.0, 100.0), DomainError);
  EXPECT_THROW(default_cuts(-0.1), DomainError);
}

TEST(Mfd, RampLambdaValuesAccepted) {
  for (double l : {0.07, 0.095, 0.12}) EXPECT_NO_THROW(default_cuts(l));
}

TEST(Mfd, CutsCriticalNonDecreasingInLambda) {
  double prev = 0.0;
  for (double l = 0.03; l <= 0.1201; l += 0.005) {
    const double c = critical_accumulation(default_cuts(l));
    EXPECT_GE(c, prev - 0.1) << "lambda " << l;
    prev = c;
  }
}

TEST(Mfd, SpeedDropScalesFlow) {
  const MfdSpec s = inner();
  for (double d : {0.125, 0.25}) {
    const MfdSpec t = apply_speed_drop(s, d);
    EXPECT_NEAR(t.max_flow(), (1.0 - d) * s.max_flow(), 1e-6 * s.max_flow());
    EXPECT_NEAR(t.n_crit(), s.n_crit(), 0.1);
    EXPECT_EQ(t.n_cap(), s.n_cap());
  }
  EXPECT_TRUE(apply_speed_drop(s, 0.0) == s);
  EXPECT_THROW(apply_speed_drop(s, 1.0), DomainError);
  EXPECT_THROW(apply_speed_drop(s, -0.1), DomainError);
}

TEST(Mfd, SpeedDropProperty) {
  prop::Gen g(11);
  const MfdSpec s = inner();
  for (int i = 0; i < 200; ++i) {
    const double d = g.uniform(1e-6, 0.999);
    const MfdSpec t = apply_speed_drop(s, d);
    ASSERT_NEAR(t.max_flow(), (1.0 - d) * s.max_flow(), 1e-6 * (1.0 - d) * s.max_flow());
    ASSERT_NEAR(critical_accumulation(t), critical_accumulation(s), 0.2);
  }
}

TEST(Mfd, CapacityDropContractsBothAxes) {
  const MfdSpec s = inner();
  const MfdSpec t = apply_capacity_drop(s, 0.125);
  EXPECT_NEAR(t.n_crit(), 0.875 * crit_oracle(kA, kB, kC), 0.1);
  EXPECT_NEAR(t.n_crit(), 2968.0, 1.0);
  EXPECT_NEAR(t.n_cap(), 0.875 * s.n_cap(), 1e-9);
  EXPECT_NEAR(t.slope(0.0), s.slope(0.0), 1e-9 * s.slope(0.0));
  EXPECT_TRUE(apply_capacity_drop(s, 0.0) == s);
  EXPECT_THROW(apply_capacity_drop(s, 1.5), DomainError);
}

TEST(Mfd, AverageOfIdenticalSpecs) {
  const MfdSpec s = inner();
  const MfdSpec avg = average_mfds({s, s, s});
  for (int i = 0; i <= 100; ++i) {
    const double n = s.n_cap() * i / 100.0;
    EXPECT_NEAR(avg.flow(n), s.flow(n), 1e-3);
  }
}

TEST(Mfd, AverageIsPointwiseMean) {
  const MfdSpec a = inner();
  const MfdSpec b = apply_speed_drop(inner(), 0.5);
  const MfdSpec avg = average_mfds({a, b});
  EXPECT_NEAR(avg.flow(2500.0), 0.75 * a.flow(2500.0), 2e-3);
}
