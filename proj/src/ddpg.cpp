#include "perimeter/ddpg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "perimeter/errors.hpp"

namespace perimeter {

void Hyperparams::validate() const {
  auto fail = [](const std::string& what) { throw DomainError("ddpg: " + what); };
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) fail("tau must lie in (0, 1]");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) fail("learning rates must be positive");
  if (batch_size < 1) fail("batch_size must be positive");
  if (buffer_capacity < 1) fail("buffer_capacity must be positive");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be non-negative");
  if (!(noise_decay > 0.0 && noise_decay <= 1.0)) fail("noise_decay must lie in (0, 1]");
  if (hidden.empty()) fail("at least one hidden layer is required");
  for (int h : hidden) {
    if (h < 1) fail("hidden sizes must be positive");
  }
  if (updates_per_step < 0) fail("updates_per_step must be non-negative");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw DomainError("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  if (items_.empty()) throw DomainError("sampling from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<const Transition*> out(n);
  for (auto& p : out) p = &items_[pick(rng)];
  return out;
}

Batch make_batch(std::span<const Transition* const> items) {
  if (items.empty()) throw DomainError("empty batch");
  const auto n = static_cast<Eigen::Index>(items.size());
  const auto dim = static_cast<Eigen::Index>(items.front()->state.size());
  Batch b{Eigen::MatrixXd(dim, n), Eigen::MatrixXd(2, n), Eigen::VectorXd(n),
          Eigen::MatrixXd(dim, n), Eigen::VectorXd(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Transition& t = *items[k];
    if (static_cast<Eigen::Index>(t.state.size()) != dim ||
        static_cast<Eigen::Index>(t.next_state.size()) != dim) {
      throw DomainError("transition state dimensions differ within a batch");
    }
    b.states.col(k) = Eigen::Map<const Eigen::VectorXd>(t.state.data(), dim);
    b.next_states.col(k) = Eigen::Map<const Eigen::VectorXd>(t.next_state.data(), dim);
    b.actions(0, k) = t.action[0];
    b.actions(1, k) = t.action[1];
    b.rewards(k) = t.reward;
    b.done(k) = t.done ? 1.0 : 0.0;
  }
  return b;
}

Mlp make_actor(int state_dim, const Hyperparams& hp, std::mt19937_64& rng) {
  std::vector<int> sizes{state_dim};
  sizes.insert(sizes.end(), hp.hidden.begin(), hp.hidden.end());
  sizes.push_back(2);
  return Mlp(sizes, OutputActivation::Bounded, rng, hp.final_actor_scale, kUMin, kUMax);
}

Mlp make_critic(int state_dim, const Hyperparams& hp, std::mt19937_64& rng) {
  std::vector<int> sizes{state_dim + 2};
  sizes.insert(sizes.end(), hp.hidden.begin(), hp.hidden.end());
  sizes.push_back(1);
  return Mlp(sizes, OutputActivation::Identity, rng);
}

namespace {

Eigen::VectorXd column(std::span<const double> s) {
  return Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
  if (states.cols() != actions.cols()) throw DomainError("state/action batch sizes differ");
  Eigen::MatrixXd x(states.rows() + actions.rows(), states.cols());
  x << states, actions;
  return x;
}

void check_critic_dims(const Mlp& critic, Eigen::Index state_rows, Eigen::Index action_rows) {
  if (critic.input_size() != state_rows + action_rows || critic.output_size() != 1) {
    throw DomainError("critic expects input " + std::to_string(critic.input_size()) + ", got " +
                      std::to_string(state_rows + action_rows));
  }
}

[[noreturn]] void training_failure(const std::string& what, const Eigen::MatrixXd& states) {
  std::ostringstream msg;
  msg << what << "; first batch state = [";
  for (Eigen::Index i = 0; i < states.rows(); ++i) msg << (i ? ", " : "") << states(i, 0);
  msg << "]";
  throw NumericError(msg.str());
}

}  // namespace

ControlAction actor_forward(const Mlp& actor, std::span<const double> s) {
  if (static_cast<int>(s.size()) != actor.input_size()) {
    throw DomainError("state has " + std::to_string(s.size()) + " components, actor expects " +
                      std::to_string(actor.input_size()));
  }
  const Eigen::MatrixXd y = actor.forward(column(s));
  return ControlAction{y(0, 0), y(1, 0)};
}

double critic_forward(const Mlp& critic, std::span<const double> s, const ControlAction& a) {
  check_critic_dims(critic, static_cast<Eigen::Index>(s.size()), 2);
  Eigen::VectorXd x(s.size() + 2);
  x << column(s), a.u12, a.u21;
  return critic.forward(x)(0, 0);
}

double td_target(double r, std::span<const double> next, const Mlp& target_actor,
                 const Mlp& target_critic, double gamma, bool done) {
  if (done) return r;
  return r + gamma * critic_forward(target_critic, next, actor_forward(target_actor, next));
}

Eigen::VectorXd td_targets(const Batch& batch, const Mlp& target_actor, const Mlp& target_critic,
                           double gamma) {
  const Eigen::MatrixXd a = target_actor.forward(batch.next_states);
  const Eigen::MatrixXd q = target_critic.forward(critic_input(batch.next_states, a));
  return batch.rewards.array() +
         gamma * (1.0 - batch.done.array()) * q.row(0).transpose().array();
}

double critic_loss(const Mlp& critic, const Eigen::MatrixXd& states,
                   const Eigen::MatrixXd& actions, const Eigen::VectorXd& targets) {
  check_critic_dims(critic, states.rows(), actions.rows());
  const Eigen::MatrixXd q = critic.forward(critic_input(states, actions));
  return (targets - q.row(0).transpose()).squaredNorm() / static_cast<double>(targets.size());
}

MlpGradients critic_loss_gradient(const Mlp& critic, const Eigen::MatrixXd& states,
                                  const Eigen::MatrixXd& actions, const Eigen::VectorXd& targets) {
  check_critic_dims(critic, states.rows(), actions.rows());
  Mlp::Tape tape;
  const Eigen::MatrixXd q = critic.forward(critic_input(states, actions), tape);
  const double n = static_cast<double>(targets.size());
  const Eigen::MatrixXd dq = (-2.0 / n) * (targets.transpose() - q.row(0));
  MlpGradients g = critic.zero_gradients();
  critic.backward(tape, dq, &g);
  return g;
}

double actor_objective(const Mlp& actor, const Mlp& critic, const Eigen::MatrixXd& states) {
  const Eigen::MatrixXd a = actor.forward(states);
  check_critic_dims(critic, states.rows(), a.rows());
  return critic.forward(critic_input(states, a)).mean();
}

MlpGradients actor_objective_gradient(const Mlp& actor, const Mlp& critic,
                                      const Eigen::MatrixXd& states) {
  Mlp::Tape actor_tape;
  const Eigen::MatrixXd a = actor.forward(states, actor_tape);
  check_critic_dims(critic, states.rows(), a.rows());
  Mlp::Tape critic_tape;
  const Eigen::MatrixXd q = critic.forward(critic_input(states, a), critic_tape);
  const double n = static_cast<double>(states.cols());
  const Eigen::MatrixXd dx =
      critic.backward(critic_tape, Eigen::MatrixXd::Constant(1, q.cols(), 1.0 / n), nullptr);
  MlpGradients g = actor.zero_gradients();
  actor.backward(actor_tape, dx.bottomRows(a.rows()), &g);
  return g;
}

std::array<double, 2> critic_action_gradient(const Mlp& critic, std::span<const double> s,
                                             const ControlAction& a) {
  check_critic_dims(critic, static_cast<Eigen::Index>(s.size()), 2);
  Eigen::VectorXd x(s.size() + 2);
  x << column(s), a.u12, a.u21;
  Mlp::Tape tape;
  critic.forward(x, tape);
  const Eigen::MatrixXd dx = critic.backward(tape, Eigen::MatrixXd::Ones(1, 1), nullptr);
  return {dx(x.size() - 2, 0), dx(x.size() - 1, 0)};
}

double critic_update(Mlp& critic, Adam& opt, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& actions, const Eigen::VectorXd& targets, double lr) {
  if (targets.size() == 0) throw DomainError("critic update on an empty batch");
  check_critic_dims(critic, states.rows(), actions.rows());
  Mlp::Tape tape;
  const Eigen::MatrixXd q = critic.forward(critic_input(states, actions), tape);
  const double n = static_cast<double>(targets.size());
  const Eigen::RowVectorXd err = targets.transpose() - q.row(0);
  const double loss = err.squaredNorm() / n;
  if (!std::isfinite(loss)) training_failure("critic loss is not finite", states);
  MlpGradients g = critic.zero_gradients();
  critic.backward(tape, (-2.0 / n) * err, &g);
  opt.descend(critic, g, lr);
  return loss;
}

double actor_update(Mlp& actor, Adam& opt, const Mlp& critic, const Eigen::MatrixXd& states,
                    double lr) {
  if (states.cols() == 0) throw DomainError("actor update on an empty batch");
  Mlp::Tape actor_tape;
  const Eigen::MatrixXd a = actor.forward(states, actor_tape);
  check_critic_dims(critic, states.rows(), a.rows());
  Mlp::Tape critic_tape;
  const Eigen::MatrixXd q = critic.forward(critic_input(states, a), critic_tape);
  const double objective = q.mean();
  const double n = static_cast<double>(states.cols());
  const Eigen::MatrixXd dx =
      critic.backward(critic_tape, Eigen::MatrixXd::Constant(1, q.cols(), 1.0 / n), nullptr);
  MlpGradients g = actor.zero_gradients();
  actor.backward(actor_tape, dx.bottomRows(a.rows()), &g);
  for (std::size_t l = 0; l < g.weight.size(); ++l) {
    if (!g.weight[l].allFinite() || !g.bias[l].allFinite()) {
      training_failure("actor gradient is not finite", states);
    }
  }
  g.scale(-1.0);
  opt.descend(actor, g, lr);
  return objective;
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (!target.same_architecture(online)) throw InvariantError("soft update across architectures");
  for (std::size_t l = 0; l < online.layers().size(); ++l) {
    DenseLayer& t = target.layer(l);
    const DenseLayer& o = online.layers()[l];
    t.weight = tau * o.weight + (1.0 - tau) * t.weight;
    t.bias = tau * o.bias + (1.0 - tau) * t.bias;
  }
}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

}  // namespace

DdpgAgent::DdpgAgent(AgentSpec spec, std::uint64_t seed)
    : spec_((spec.hp.validate(), std::move(spec))),
      encoder_(spec_.variant, spec_.scales),
      init_rng_(stream(seed, 1)),
      noise_rng_(stream(seed, 2)),
      replay_rng_(stream(seed, 3)),
      actor_(make_actor(encoder_.dimension(), spec_.hp, init_rng_)),
      critic_(make_critic(encoder_.dimension(), spec_.hp, init_rng_)),
      target_actor_(actor_),
      target_critic_(critic_),
      actor_opt_(actor_),
      critic_opt_(critic_),
      buffer_(spec_.hp.buffer_capacity) {}

void DdpgAgent::begin_episode(const EpisodeContext&) {
  encoder_.reset();
  noise_ = training_ ? spec_.hp.noise_sigma * std::pow(spec_.hp.noise_decay, training_episodes_)
                     : 0.0;
  episode_reward_ = 0.0;
}

ControlAction DdpgAgent::act(const Observation& obs) {
  last_state_ = encoder_.observe(obs.state, obs.demand);
  ControlAction a = actor_forward(actor_, last_state_);
  if (noise_ > 0.0) {
    std::normal_distribution<double> gauss(0.0, noise_);
    a.u12 += gauss(noise_rng_);
    a.u21 += gauss(noise_rng_);
  }
  a.u12 = std::clamp(a.u12, kUMin, kUMax);
  a.u21 = std::clamp(a.u21, kUMin, kUMax);
  return a;
}

void DdpgAgent::feedback(const Observation&, const ControlAction& applied,
                         const RewardTerms& reward, const Observation& after, bool done) {
  const double r = spec_.shaped_reward ? reward.shaped() : reward.completion;
  episode_reward_ += r;
  if (!training_) return;
  buffer_.push(Transition{last_state_, {applied.u12, applied.u21}, r,
                          encoder_.preview(after.state, after.demand),
                          done && spec_.hp.terminal_at_horizon});
  if (buffer_.size() < static_cast<std::size_t>(spec_.hp.batch_size)) return;
  for (int k = 0; k < spec_.hp.updates_per_step; ++k) train_step();
}

void DdpgAgent::train_step() {
  const auto items = buffer_.sample(static_cast<std::size_t>(spec_.hp.batch_size), replay_rng_);
  const Batch batch = make_batch(items);
  const Eigen::VectorXd y = td_targets(batch, target_actor_, target_critic_, spec_.hp.gamma);
  last_critic_loss_ =
      critic_update(critic_, critic_opt_, batch.states, batch.actions, y, spec_.hp.critic_lr);
  last_actor_objective_ =
      actor_update(actor_, actor_opt_, critic_, batch.states, spec_.hp.actor_lr);
  soft_update(target_actor_, actor_, spec_.hp.tau);
  soft_update(target_critic_, critic_, spec_.hp.tau);
  ++updates_;
}

void DdpgAgent::end_episode(EpisodeTrace& trace) {
  if (training_) ++training_episodes_;
  std::ostringstream fmt;
  fmt.precision(17);
  auto put = [&](const char* key, double v) {
    fmt.str("");
    fmt << v;
    trace.metadata[key] = fmt.str();
  };
  put("noise_scale", noise_);
  put("cumulative_reward", episode_reward_);
  put("critic_loss", last_critic_loss_);
  put("actor_objective", last_actor_objective_);
  trace.metadata["updates"] = std::to_string(updates_);
  trace.metadata["training"] = training_ ? "true" : "false";
}

EpisodeTrace train_episode(DdpgAgent& agent, const EpisodeScenario& scenario, std::uint64_t seed,
                           RewardModel& reward, int episode) {
  const bool was = agent.training();
  agent.set_training(true);
  EpisodeTrace trace = run_episode(agent, scenario, seed, &reward, episode);
  agent.set_training(was);
  return trace;
}

}  // namespace perimeter
