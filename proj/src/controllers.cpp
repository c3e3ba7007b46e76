#include "perimeter/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "perimeter/errors.hpp"

namespace perimeter {

ControlAction no_control_action(double u) { return ControlAction{u, u}; }

namespace {

struct Rollout {
  std::vector<PlantState> states;  // states[k] at the start of horizon step k
  std::vector<double> completed;   // per horizon step
};

int block_count(int steps, int block) { return (steps + block - 1) / block; }

// Simulates horizon steps [from, steps) starting from `start`, returns the
// completed vehicles over that range. Fills `roll` when given.
double simulate(const PlantState& start, int t, int from, int steps, std::span<const double> x,
                const MpcConfig& cfg, Rollout* roll) {
  PlantState s = start;
  double total = 0.0;
  for (int k = from; k < steps; ++k) {
    const int b = k / cfg.block;
    const ControlAction a{x[2 * b], x[2 * b + 1]};
    const StepOutcome o =
        advance(s, a, cfg.demand_model.at(static_cast<std::size_t>(t + k)), cfg.mfd_model,
                cfg.plant);
    if (roll) {
      roll->states[k] = s;
      roll->completed[k] = o.intraregional_completed;
    }
    total += o.intraregional_completed;
    s = o.next;
  }
  return total;
}

[[noreturn]] void solver_failure(const PlantState& state, int t, std::span<const double> x) {
  std::ostringstream msg;
  msg << "MPC objective is not finite at step " << t << "; state = [" << state.n[0] << ", "
      << state.n[1] << ", " << state.n[2] << ", " << state.n[3] << "]; u = [";
  for (std::size_t i = 0; i < x.size(); ++i) msg << (i ? ", " : "") << x[i];
  msg << "]";
  throw NumericError(msg.str());
}

}  // namespace

int mpc_horizon_steps(int t, const MpcConfig& cfg) {
  const int remaining = static_cast<int>(cfg.demand_model.steps()) - t;
  return std::max(0, std::min(cfg.horizon, remaining));
}

double mpc_objective(const PlantState& state, int t, std::span<const double> u,
                     const MpcConfig& cfg) {
  const int steps = mpc_horizon_steps(t, cfg);
  if (static_cast<int>(u.size()) < 2 * block_count(steps, cfg.block)) {
    throw DomainError("control sequence shorter than the horizon");
  }
  return simulate(state, t, 0, steps, u, cfg, nullptr);
}

ControlAction mpc_solve(const PlantState& state, int t, const MpcConfig& cfg,
                        MpcDiagnostics* diag) {
  if (cfg.horizon < 1 || cfg.block < 1 || cfg.iterations < 1 || cfg.restarts < 1) {
    throw DomainError("MPC horizon, block, iterations and restarts must be positive");
  }
  const int steps = mpc_horizon_steps(t, cfg);
  if (steps == 0) throw DomainError("MPC called past the end of the demand model");
  const int vars = 2 * block_count(steps, cfg.block);
  const double lo = cfg.u_min;
  const double hi = cfg.u_max;

  std::mt19937_64 rng(cfg.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(t + 1)));
  std::uniform_real_distribution<double> uniform(lo, hi);

  Rollout roll{std::vector<PlantState>(steps), std::vector<double>(steps)};
  std::vector<double> best_x;
  double best_f = -std::numeric_limits<double>::infinity();
  if (diag) *diag = MpcDiagnostics{};

  for (int r = 0; r < cfg.restarts; ++r) {
    std::vector<double> x(vars);
    switch (r) {
      case 0: std::fill(x.begin(), x.end(), hi); break;
      case 1: std::fill(x.begin(), x.end(), lo); break;
      case 2: std::fill(x.begin(), x.end(), 0.5 * (lo + hi)); break;
      default:
        for (auto& v : x) v = uniform(rng);
    }
    double f = simulate(state, t, 0, steps, x, cfg, &roll);
    if (!std::isfinite(f)) solver_failure(state, t, x);
    const double f_start = f;

    std::vector<double> grad(vars);
    std::vector<double> trial(vars);
    double alpha = cfg.initial_step;
    int it = 0;
    for (; it < cfg.iterations; ++it) {
      // Forward differences; a perturbation of block b only changes the
      // rollout from its first step onward.
      double prefix = 0.0;
      int next_block_step = 0;
      double gmax = 0.0;
      for (int b = 0; b < vars / 2; ++b) {
        const int first = b * cfg.block;
        for (; next_block_step < first; ++next_block_step) prefix += roll.completed[next_block_step];
        for (int c = 0; c < 2; ++c) {
          const int i = 2 * b + c;
          const double saved = x[i];
          const double h = saved + cfg.fd_step <= hi ? cfg.fd_step : -cfg.fd_step;
          x[i] = saved + h;
          const double fp = prefix + simulate(roll.states[first], t, first, steps, x, cfg, nullptr);
          x[i] = saved;
          grad[i] = (fp - f) / h;
          gmax = std::max(gmax, std::abs(grad[i]));
        }
      }
      if (!std::isfinite(gmax)) solver_failure(state, t, x);
      if (gmax == 0.0) break;

      bool improved = false;
      while (alpha >= cfg.min_step) {
        for (int i = 0; i < vars; ++i) trial[i] = std::clamp(x[i] + alpha * grad[i] / gmax, lo, hi);
        const double ft = simulate(state, t, 0, steps, trial, cfg, nullptr);
        if (!std::isfinite(ft)) solver_failure(state, t, trial);
        if (ft > f) {
          x.swap(trial);
          f = simulate(state, t, 0, steps, x, cfg, &roll);
          alpha = std::min(alpha * 1.5, hi - lo);
          improved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!improved) break;
    }

    if (diag) {
      diag->start_objectives.push_back(f_start);
      diag->restart_objectives.push_back(f);
      diag->restart_iterations.push_back(it);
    }
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  }

  if (diag) {
    diag->best_objective = best_f;
    diag->best_sequence.clear();
    for (int k = 0; k < steps; ++k) {
      const int b = k / cfg.block;
      diag->best_sequence.push_back(best_x[2 * b]);
      diag->best_sequence.push_back(best_x[2 * b + 1]);
    }
  }
  return ControlAction{best_x[0], best_x[1]};
}

MpcController::MpcController(Settings settings, DemandProfile prior_demand,
                             RegionMfds prior_mfds)
    : settings_(settings),
      demand_history_(std::move(prior_demand)),
      prior_mfds_(std::move(prior_mfds)) {}

void MpcController::begin_episode(const EpisodeContext& ctx) {
  realized_mfds_ = ctx.scenario.mfds;
  RegionMfds model = prior_mfds_;
  DemandProfile demand = demand_history_.model();
  if (settings_.oracle) {
    model = ctx.scenario.mfds;
    demand = ctx.scenario.demand;
  } else if (!inner_history_.empty()) {
    model = RegionMfds{average_mfds(inner_history_), average_mfds(outer_history_)};
  }
  cfg_.emplace(MpcConfig{std::move(demand), std::move(model)});
  cfg_->plant = PlantParams{ctx.scenario.plant.dt, settings_.model_substeps};
  cfg_->horizon = settings_.horizon;
  cfg_->block = settings_.block;
  cfg_->iterations = settings_.iterations;
  cfg_->restarts = settings_.restarts;
  cfg_->initial_step = settings_.initial_step;
  cfg_->min_step = settings_.min_step;
  cfg_->fd_step = settings_.fd_step;
  cfg_->u_min = ctx.scenario.u_min;
  cfg_->u_max = ctx.scenario.u_max;
  cfg_->seed = ctx.seed;
  objectives_.clear();
  iterations_.clear();
}

ControlAction MpcController::act(const Observation& obs) {
  MpcDiagnostics diag;
  const ControlAction a = mpc_solve(obs.state, obs.step, *cfg_, &diag);
  objectives_.push_back(diag.best_objective);
  int its = 0;
  for (int v : diag.restart_iterations) its += v;
  iterations_.push_back(its);
  return a;
}

void MpcController::end_episode(EpisodeTrace& trace) {
  DemandProfile realized;
  realized.dt = trace.dt;
  for (const auto& rec : trace.steps) realized.flows.push_back(rec.demand);
  demand_history_.add(realized);
  if (realized_mfds_) {
    inner_history_.push_back(realized_mfds_->inner);
    outer_history_.push_back(realized_mfds_->outer);
  }

  std::ostringstream obj;
  std::ostringstream its;
  obj.precision(10);
  for (std::size_t k = 0; k < objectives_.size(); ++k) {
    obj << (k ? "," : "") << objectives_[k];
    its << (k ? "," : "") << iterations_[k];
  }
  trace.metadata["mpc_objective"] = "[" + obj.str() + "]";
  trace.metadata["mpc_iterations"] = "[" + its.str() + "]";
  trace.metadata["mpc_history_size"] = std::to_string(demand_history_.size());
}

}  // namespace perimeter
