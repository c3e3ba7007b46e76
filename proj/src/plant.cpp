#include "perimeter/plant.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "perimeter/errors.hpp"

namespace perimeter {

namespace {

void require_finite(const OdFlows& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite ") + what);
  }
}

}  // namespace

OdFlows completions(const PlantState& state, const RegionMfds& mfds) {
  OdFlows m{};
  for (int i = 0; i < 2; ++i) {
    const double total = state.region(i);
    if (total <= 0.0) continue;
    const double g = mfds.region(i).flow(total);
    const int own = i == 0 ? kOd11 : kOd22;
    const int cross = i == 0 ? kOd12 : kOd21;
    m[own] = state.n[own] / total * g;
    m[cross] = state.n[cross] / total * g;
  }
  return m;
}

StepOutcome advance(const PlantState& state, const ControlAction& action, const OdFlows& demand,
                    const RegionMfds& mfds, const PlantParams& params) {
  require_finite(state.n, "accumulation");
  require_finite(demand, "demand");
  if (!std::isfinite(action.u12) || !std::isfinite(action.u21)) {
    throw NumericError("non-finite control action");
  }
  if (params.substeps < 1 || !(params.dt > 0.0)) throw DomainError("bad plant step parameters");

  const double h = params.dt / params.substeps;
  const std::array<double, 2> cap{mfds.inner.n_cap(), mfds.outer.n_cap()};
  StepOutcome out;
  PlantState s = state;

  for (int sub = 0; sub < params.substeps; ++sub) {
    const OdFlows m = completions(s, mfds);
    const double t12 = action.u12 * m[kOd12];
    const double t21 = action.u21 * m[kOd21];
    const std::array<double, 2> demand_in{demand[kOd11] + demand[kOd12],
                                          demand[kOd21] + demand[kOd22]};

    // Acceptance ratio per region so that n_i stays within n_cap. Outflow of
    // one region depends on the other's acceptance, hence a few passes.
    std::array<double, 2> accept{1.0, 1.0};
    for (int pass = 0; pass < 3; ++pass) {
      for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        const double transfer_in = i == 0 ? t21 : t12;
        const double transfer_out = i == 0 ? t12 : t21;
        const double completed = i == 0 ? m[kOd11] : m[kOd22];
        const double inflow = h * (demand_in[i] + transfer_in);
        const double room = cap[i] - s.region(i) + h * (completed + accept[j] * transfer_out);
        accept[i] = inflow > room ? std::max(0.0, room) / inflow : 1.0;
      }
    }

    const double moved12 = accept[1] * t12;
    const double moved21 = accept[0] * t21;
    PlantState next;
    next.n[kOd11] = s.n[kOd11] + h * (accept[0] * demand[kOd11] + moved21 - m[kOd11]);
    next.n[kOd12] = s.n[kOd12] + h * (accept[0] * demand[kOd12] - moved12);
    next.n[kOd21] = s.n[kOd21] + h * (accept[1] * demand[kOd21] - moved21);
    next.n[kOd22] = s.n[kOd22] + h * (accept[1] * demand[kOd22] + moved12 - m[kOd22]);

    out.rejected_inflow +=
        h * ((1.0 - accept[0]) * demand_in[0] + (1.0 - accept[1]) * demand_in[1]);
    out.intraregional_completed += h * (m[kOd11] + m[kOd22]);
    out.moved[kOd11] += h * m[kOd11];
    out.moved[kOd12] += h * moved12;
    out.moved[kOd21] += h * moved21;
    out.moved[kOd22] += h * m[kOd22];

    for (double& v : next.n) {
      if (v < 0.0) {
        out.adjustment -= v;
        v = 0.0;
      }
    }
    for (int i = 0; i < 2; ++i) {
      const double total = next.region(i);
      if (total > cap[i]) {
        const double keep = cap[i] / total;
        const int own = i == 0 ? kOd11 : kOd22;
        const int cross = i == 0 ? kOd12 : kOd21;
        out.adjustment -= total - cap[i];
        next.n[own] *= keep;
        next.n[cross] *= keep;
      }
    }
    s = next;
  }
  out.next = s;
  return out;
}

PlantState step(const PlantState& state, const ControlAction& action, const OdFlows& demand,
                const RegionMfds& mfds, const PlantParams& params) {
  return advance(state, action, demand, mfds, params).next;
}

EpisodeTrace run_episode(Controller& controller, const EpisodeScenario& scenario,
                         std::uint64_t seed, RewardModel* reward, int episode) {
  EpisodeTrace trace;
  trace.scenario = scenario.id;
  trace.method = controller.name();
  trace.episode = episode;
  trace.seed = seed;
  trace.dt = scenario.plant.dt;

  const std::size_t steps = scenario.demand.steps();
  trace.steps.reserve(steps);
  const bool bounded = controller.respects_signal_bounds();
  const double lo = bounded ? scenario.u_min : 0.0;
  const double hi = bounded ? scenario.u_max : 1.0;

  controller.begin_episode(EpisodeContext{scenario, episode, seed});
  if (reward) reward->reset(scenario.initial, scenario.mfds);

  PlantState state = scenario.initial;
  Observation obs{0, 0.0, state, scenario.demand.at(0)};
  for (std::size_t k = 0; k < steps; ++k) {
    ControlAction a = controller.act(obs);
    if (a.u12 < lo || a.u12 > hi || a.u21 < lo || a.u21 > hi || std::isnan(a.u12) ||
        std::isnan(a.u21)) {
      spdlog::warn("{}: action ({}, {}) at step {} clamped to [{}, {}]", controller.name(), a.u12,
                   a.u21, k, lo, hi);
      a.u12 = std::isnan(a.u12) ? lo : std::clamp(a.u12, lo, hi);
      a.u21 = std::isnan(a.u21) ? lo : std::clamp(a.u21, lo, hi);
    }

    const StepOutcome outcome = advance(state, a, obs.demand, scenario.mfds, scenario.plant);
    StepRecord rec;
    rec.step = static_cast<int>(k);
    rec.time = obs.time;
    rec.state = state;
    rec.action = a;
    rec.demand = obs.demand;
    for (int od = 0; od < 4; ++od) rec.completion[od] = outcome.moved[od] / scenario.plant.dt;
    if (reward) {
      rec.reward = reward->evaluate(state, outcome, scenario.mfds, scenario.plant.dt);
    } else {
      rec.reward.completion = outcome.intraregional_completed / scenario.plant.dt;
    }
    trace.steps.push_back(rec);

    const bool done = k + 1 == steps;
    Observation next{static_cast<int>(k + 1), obs.time + scenario.plant.dt, outcome.next,
                     done ? OdFlows{} : scenario.demand.at(k + 1)};
    controller.feedback(obs, a, rec.reward, next, done);
    state = outcome.next;
    obs = next;
  }
  trace.final_state = state;
  controller.end_episode(trace);
  return trace;
}

}  // namespace perimeter
