#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "perimeter/antifragile.hpp"
#include "perimeter/mlp.hpp"
#include "perimeter/plant.hpp"

namespace perimeter {

struct Hyperparams {
  double gamma = 0.99;
  double tau = 0.005;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  int batch_size = 64;
  std::size_t buffer_capacity = 100000;
  double noise_sigma = 0.08;  // 0.1 x action range
  double noise_decay = 0.99;  // per training episode
  std::vector<int> hidden{64, 64};
  double final_actor_scale = 1e-3;
  int updates_per_step = 1;
  /// Treat the end of the horizon as terminal (no bootstrap on the last step).
  bool terminal_at_horizon = true;

  /// Throws DomainError naming the offending field.
  void validate() const;
};

struct Transition {
  std::vector<double> state;
  std::array<double, 2> action{};
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

/// Bounded FIFO with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Oldest first.
  const Transition& at(std::size_t i) const { return items_.at(i); }
  std::vector<const Transition*> sample(std::size_t n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

struct Batch {
  Eigen::MatrixXd states;       // dim x N
  Eigen::MatrixXd actions;      // 2 x N
  Eigen::VectorXd rewards;      // N
  Eigen::MatrixXd next_states;  // dim x N
  Eigen::VectorXd done;         // N, 1 for terminal
};

Batch make_batch(std::span<const Transition* const> items);

Mlp make_actor(int state_dim, const Hyperparams& hp, std::mt19937_64& rng);
Mlp make_critic(int state_dim, const Hyperparams& hp, std::mt19937_64& rng);

ControlAction actor_forward(const Mlp& actor, std::span<const double> s);
double critic_forward(const Mlp& critic, std::span<const double> s, const ControlAction& a);

/// r + gamma Q'(s', mu'(s')); r alone when done.
double td_target(double r, std::span<const double> next, const Mlp& target_actor,
                 const Mlp& target_critic, double gamma, bool done);
Eigen::VectorXd td_targets(const Batch& batch, const Mlp& target_actor, const Mlp& target_critic,
                           double gamma);

/// L = mean (y - Q(s, a))^2.
double critic_loss(const Mlp& critic, const Eigen::MatrixXd& states,
                   const Eigen::MatrixXd& actions, const Eigen::VectorXd& targets);
MlpGradients critic_loss_gradient(const Mlp& critic, const Eigen::MatrixXd& states,
                                  const Eigen::MatrixXd& actions, const Eigen::VectorXd& targets);

/// J = mean Q(s, mu(s)).
double actor_objective(const Mlp& actor, const Mlp& critic, const Eigen::MatrixXd& states);
MlpGradients actor_objective_gradient(const Mlp& actor, const Mlp& critic,
                                      const Eigen::MatrixXd& states);

/// dQ/da at (s, a).
std::array<double, 2> critic_action_gradient(const Mlp& critic, std::span<const double> s,
                                             const ControlAction& a);

/// One Adam step on the critic loss; returns the pre-step loss.
double critic_update(Mlp& critic, Adam& opt, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& actions, const Eigen::VectorXd& targets, double lr);

/// One Adam ascent step on J; returns J before the step.
double actor_update(Mlp& actor, Adam& opt, const Mlp& critic, const Eigen::MatrixXd& states,
                    double lr);

/// theta' <- tau theta + (1 - tau) theta'.
void soft_update(Mlp& target, const Mlp& online, double tau);

struct AgentSpec {
  std::string name = "rl-baseline";
  EncoderVariant variant = EncoderVariant::Baseline;
  EncoderScales scales;
  /// Learn from completion + eps instead of completion alone.
  bool shaped_reward = false;
  Hyperparams hp;
};

class DdpgAgent final : public Controller {
 public:
  DdpgAgent(AgentSpec spec, std::uint64_t seed);

  std::string name() const override { return spec_.name; }
  void begin_episode(const EpisodeContext& ctx) override;
  ControlAction act(const Observation& obs) override;
  void feedback(const Observation& before, const ControlAction& applied,
                const RewardTerms& reward, const Observation& after, bool done) override;
  void end_episode(EpisodeTrace& trace) override;

  /// Frozen mode: no noise, no buffer writes, no updates.
  void set_training(bool on) { training_ = on; }
  bool training() const { return training_; }
  double noise_scale() const { return noise_; }
  std::int64_t updates() const { return updates_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const AgentSpec& spec() const { return spec_; }

 private:
  void train_step();

  AgentSpec spec_;
  StateEncoder encoder_;
  std::mt19937_64 init_rng_;
  std::mt19937_64 noise_rng_;
  std::mt19937_64 replay_rng_;
  Mlp actor_;
  Mlp critic_;
  Mlp target_actor_;
  Mlp target_critic_;
  Adam actor_opt_;
  Adam critic_opt_;
  ReplayBuffer buffer_;
  bool training_ = true;
  int training_episodes_ = 0;
  double noise_ = 0.0;
  std::int64_t updates_ = 0;
  double episode_reward_ = 0.0;
  std::vector<double> last_state_;
  std::array<double, 2> last_action_{};
  double last_critic_loss_ = 0.0;
  double last_actor_objective_ = 0.0;
};

/// Rolls one learning episode (noise and updates on).
EpisodeTrace train_episode(DdpgAgent& agent, const EpisodeScenario& scenario, std::uint64_t seed,
                           RewardModel& reward, int episode = 0);

}  // namespace perimeter
