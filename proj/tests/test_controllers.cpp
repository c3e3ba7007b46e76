#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "perimeter/controllers.hpp"
#include "perimeter/metrics.hpp"

using namespace perimeter;

namespace {

MpcConfig small_config(int horizon) {
  const Config cfg = prop::default_config();
  MpcConfig m{cfg.base_demand(), cfg.base_mfds()};
  m.horizon = horizon;
  m.block = 1;
  m.plant = cfg.plant_params();
  return m;
}

std::vector<double> grid(int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(kUMin + (kUMax - kUMin) * i / (points - 1));
  return g;
}

// Best objective over all 2-step sequences on the grid.
double grid_optimum(const PlantState& s, int t, const MpcConfig& cfg, int points) {
  const auto g = grid(points);
  double best = -1.0;
  for (double a : g)
    for (double b : g)
      for (double c : g)
        for (double d : g) {
          const std::vector<double> u{a, b, c, d};
          best = std::max(best, mpc_objective(s, t, u, cfg));
        }
  return best;
}

}  // namespace

TEST(NoControl, ConstantOpenPerimeter) {
  EXPECT_EQ(no_control_action(), (ControlAction{1.0, 1.0}));
  NoControl nc;
  EXPECT_FALSE(nc.respects_signal_bounds());
  Observation o;
  EXPECT_EQ(nc.act(o), (ControlAction{1.0, 1.0}));
  o.step = 77;
  o.state.n = {9000.0, 0.0, 0.0, 0.0};
  EXPECT_EQ(nc.act(o), (ControlAction{1.0, 1.0}));
  NoControl gated(0.9);
  EXPECT_EQ(gated.act(o), (ControlAction{0.9, 0.9}));
}

TEST(Mpc, FlatObjectiveReturnsFirstStart) {
  MpcConfig cfg = small_config(5);
  for (auto& q : cfg.demand_model.flows) q = OdFlows{};
  const ControlAction a = mpc_solve(PlantState{}, 0, cfg);
  EXPECT_EQ(a, (ControlAction{kUMax, kUMax}));
}

TEST(Mpc, GatesInflowToCongestedRegion) {
  MpcConfig cfg = small_config(1);
  PlantState s;
  s.n = {4000.0, 4000.0, 1500.0, 1000.0};
  // Brute-force 9 x 9 grid over the single step.
  double best = -1.0, best_u21 = 0.0;
  for (double a : grid(9)) {
    for (double b : grid(9)) {
      const std::vector<double> u{a, b};
      const double v = mpc_objective(s, 0, u, cfg);
      if (v > best) best = v, best_u21 = b;
    }
  }
  EXPECT_DOUBLE_EQ(best_u21, kUMin);
  EXPECT_NEAR(mpc_solve(s, 0, cfg).u21, kUMin, 1e-9);
}

TEST(Mpc, ActionsStayInBounds) {
  prop::Gen g(31);
  const MpcConfig cfg = small_config(4);
  for (int i = 0; i < 40; ++i) {
    const PlantState s = g.state(9000.0, 18000.0);
    const ControlAction a = mpc_solve(s, g.integer(0, 119), cfg);
    ASSERT_GE(a.u12, kUMin);
    ASSERT_LE(a.u12, kUMax);
    ASSERT_GE(a.u21, kUMin);
    ASSERT_LE(a.u21, kUMax);
  }
}

TEST(Mpc, BestBeatsEveryStart) {
  prop::Gen g(32);
  MpcConfig cfg = small_config(6);
  cfg.block = 2;
  for (int i = 0; i < 20; ++i) {
    MpcDiagnostics d;
    mpc_solve(g.state(9000.0, 18000.0), g.integer(0, 100), cfg, &d);
    ASSERT_EQ(d.start_objectives.size(), static_cast<std::size_t>(cfg.restarts));
    for (double v : d.start_objectives) ASSERT_GE(d.best_objective, v);
  }
}

TEST(Mpc, NearGridOptimumOnShortHorizon) {
  prop::Gen g(33);
  const MpcConfig cfg = small_config(2);
  for (int i = 0; i < 30; ++i) {
    const PlantState s = g.state(9000.0, 18000.0);
    const int t = g.integer(0, 110);
    MpcDiagnostics d;
    mpc_solve(s, t, cfg, &d);
    ASSERT_GE(d.best_objective, 0.99 * grid_optimum(s, t, cfg, 5));
  }
}

TEST(Mpc, HorizonClipsAtEpisodeEnd) {
  const MpcConfig cfg = small_config(30);
  EXPECT_EQ(mpc_horizon_steps(0, cfg), 30);
  EXPECT_EQ(mpc_horizon_steps(100, cfg), 20);
  EXPECT_EQ(mpc_horizon_steps(119, cfg), 1);
}

TEST(Mpc, OracleBeatsNoControlOnBase) {
  const Config cfg = prop::default_config();
  const EpisodeScenario sc{"base", cfg.base_demand(), cfg.base_mfds(), cfg.demand.initial,
                           cfg.plant_params(), kUMin, kUMax};
  auto settings = cfg.mpc_settings();
  settings.oracle = true;
  MpcController mpc(settings, cfg.base_demand(), cfg.base_mfds());
  NoControl nc;
  EXPECT_LE(tts(run_episode(mpc, sc, 1)), tts(run_episode(nc, sc, 1)));
}

TEST(Mpc, HistoryGrowsPerEpisode) {
  const Config cfg = prop::default_config();
  auto settings = cfg.mpc_settings();
  settings.horizon = 4;
  settings.iterations = 3;
  settings.restarts = 1;
  MpcController mpc(settings, cfg.base_demand(), cfg.base_mfds());
  EpisodeScenario sc{"surge", cfg.base_demand(), cfg.base_mfds(), cfg.demand.initial,
                     cfg.plant_params(), kUMin, kUMax};
  sc.demand = add_surge(sc.demand, SurgeSpec{2500.0, 1800.0, 300.0, kOd21});
  EXPECT_EQ(mpc.history_size(), 0u);
  const EpisodeTrace t = run_episode(mpc, sc, 1);
  EXPECT_EQ(mpc.history_size(), 1u);
  EXPECT_TRUE(t.metadata.count("mpc_objective"));
  run_episode(mpc, sc, 2);
  EXPECT_EQ(mpc.history_size(), 2u);
  // The model is now the surged profile, not the prior.
  EXPECT_EQ(mpc.current_config().demand_model, sc.demand);
}
