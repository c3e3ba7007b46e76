#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "generators.hpp"
#include "perimeter/demand.hpp"
#include "perimeter/errors.hpp"

using namespace perimeter;

namespace {

DemandProfile base() { return prop::default_config().base_demand(); }

double added_vehicles(const DemandProfile& a, const DemandProfile& b, Od od) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.steps(); ++k) sum += (b.at(k)[od] - a.at(k)[od]) * a.dt;
  return sum;
}

DemandProfile surged(double m) { return add_surge(base(), SurgeSpec{m, 1800.0, 300.0, kOd21}); }

}  // namespace

TEST(Demand, ShapeAndLength) {
  const DemandProfile p = base();
  EXPECT_EQ(p.steps(), 120u);
  EXPECT_EQ(p.dt, 60.0);
  for (const auto& q : p.flows) {
    for (double v : q) {
      EXPECT_GE(v, 0.0);
      EXPECT_TRUE(std::isfinite(v));
    }
  }
}

TEST(Demand, PeakAtMean) {
  const BaseDemandParams params = prop::default_config().demand.base;
  const DemandProfile p = base_profile(params);
  const int k = static_cast<int>(params.mean_s / params.dt);
  for (int od = 0; od < 4; ++od) {
    EXPECT_NEAR(p.at(k)[od], params.amplitude[od] + params.floor[od], 1e-12);
    for (std::size_t j = 0; j < p.steps(); ++j) EXPECT_LE(p.at(j)[od], p.at(k)[od] + 1e-12);
  }
}

TEST(Demand, SecondHourCarriesFewerVehicles) {
  const DemandProfile p = base();
  double h1 = 0.0, h2 = 0.0;
  for (std::size_t k = 0; k < 60; ++k) {
    for (double v : p.at(k)) h1 += v;
    for (double v : p.at(k + 60)) h2 += v;
  }
  EXPECT_LE(h2 / h1, 0.25);
}

TEST(Demand, ZeroAmplitudeIsFloor) {
  BaseDemandParams params;
  params.floor = {0.1, 0.2, 0.3, 0.4};
  const DemandProfile p = base_profile(params);
  for (const auto& q : p.flows) EXPECT_EQ(q, params.floor);
}

TEST(Demand, NegativeParametersRejected) {
  BaseDemandParams params;
  params.floor = {-0.5, 0.0, 0.0, 0.0};
  EXPECT_THROW(base_profile(params), DomainError);
}

TEST(Demand, SurgeIntegralMatchesMagnitude) {
  EXPECT_NEAR(added_vehicles(base(), surged(2500.0), kOd21), 2500.0, 12.5);
  EXPECT_NEAR(added_vehicles(base(), surged(5000.0), kOd21), 5000.0, 25.0);
  EXPECT_EQ(surged(0.0), base());
  // Other OD pairs untouched.
  EXPECT_EQ(added_vehicles(base(), surged(2500.0), kOd11), 0.0);
}

TEST(Demand, SurgeIsAdditive) {
  prop::Gen g(3);
  for (int i = 0; i < 50; ++i) {
    const double m1 = g.uniform(0.0, 4000.0);
    const double m2 = g.uniform(0.0, 4000.0);
    const SurgeSpec s1{m1, 1800.0, 300.0, kOd21};
    const SurgeSpec s2{m2, 1800.0, 300.0, kOd21};
    const DemandProfile twice = add_surge(add_surge(base(), s1), s2);
    const DemandProfile once = add_surge(base(), SurgeSpec{m1 + m2, 1800.0, 300.0, kOd21});
    for (std::size_t k = 0; k < twice.steps(); ++k) {
      ASSERT_NEAR(twice.at(k)[kOd21], once.at(k)[kOd21], 1e-9);
    }
  }
}

TEST(Demand, IncrementalMagnitude) {
  EXPECT_EQ(incremental_magnitude(50, 50, 100, 5000.0), 0.0);
  EXPECT_EQ(incremental_magnitude(100, 50, 100, 5000.0), 5000.0);
  EXPECT_DOUBLE_EQ(incremental_magnitude(75, 50, 100, 5000.0), 2500.0);
  EXPECT_THROW(incremental_magnitude(49, 50, 100, 5000.0), DomainError);
  EXPECT_THROW(incremental_magnitude(101, 50, 100, 5000.0), DomainError);
}

TEST(Demand, AveragedHistory) {
  const DemandProfile p = base();
  const std::vector<DemandProfile> same{p, p};
  EXPECT_EQ(averaged_history(same), p);

  const std::vector<DemandProfile> mixed{p, surged(2500.0)};
  const DemandProfile avg = averaged_history(mixed);
  const DemandProfile half = surged(1250.0);
  for (std::size_t k = 0; k < p.steps(); ++k) {
    for (int od = 0; od < 4; ++od) ASSERT_NEAR(avg.at(k)[od], half.at(k)[od], 1e-9);
  }
  EXPECT_THROW(averaged_history(std::vector<DemandProfile>{}), DomainError);
}

TEST(Demand, FiftyFiftyHistory) {
  std::vector<DemandProfile> hist(50, base());
  for (int i = 0; i < 50; ++i) hist.push_back(surged(2500.0));
  const DemandProfile avg = averaged_history(hist);
  // Direct summation oracle.
  for (std::size_t k = 0; k < avg.steps(); ++k) {
    double sum = 0.0;
    for (const auto& h : hist) sum += h.at(k)[kOd21];
    ASSERT_NEAR(avg.at(k)[kOd21], sum / 100.0, 1e-12);
    ASSERT_NEAR(avg.at(k)[kOd21], surged(1250.0).at(k)[kOd21], 1e-9);
  }
}

TEST(Demand, AverageIsPermutationInvariant) {
  prop::Gen g(5);
  std::vector<DemandProfile> hist;
  for (int i = 0; i < 6; ++i) hist.push_back(surged(g.uniform(0.0, 5000.0)));
  const DemandProfile a = averaged_history(hist);
  std::shuffle(hist.begin(), hist.end(), g.rng());
  const DemandProfile b = averaged_history(hist);
  for (std::size_t k = 0; k < a.steps(); ++k) {
    for (int od = 0; od < 4; ++od) ASSERT_NEAR(a.at(k)[od], b.at(k)[od], 1e-12);
  }
}

TEST(Demand, HistoryUsesPriorUntilFirstEpisode) {
  DemandHistory h(base());
  EXPECT_EQ(h.size(), 0u);
  EXPECT_EQ(h.model(), base());
  h.add(surged(2000.0));
  EXPECT_EQ(h.size(), 1u);
  EXPECT_NEAR(h.model().at(30)[kOd21], surged(2000.0).at(30)[kOd21], 1e-12);
  h.add(base());
  EXPECT_NEAR(h.model().at(30)[kOd21], surged(1000.0).at(30)[kOd21], 1e-9);
}

TEST(Demand, CsvRoundTrip) {
  const DemandProfile p = surged(2500.0);
  std::stringstream ss;
  write_demand_csv(ss, p);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "step,q11,q12,q21,q22");
  const DemandProfile back = read_demand_csv(ss);
  EXPECT_EQ(back, p);
}
