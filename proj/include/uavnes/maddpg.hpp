#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uavnes/env.hpp"
#include "uavnes/nn.hpp"
#include "uavnes/replay.hpp"
#include "uavnes/world.hpp"

namespace uavnes::maddpg {

struct OUNoiseConfig {
  double theta = 0.15;
  double mu = 0.0;
  double sigma0 = 0.2;
  double decay = 0.9999;     // per environment step
  double sigma_floor = 0.01;
};

struct TrainConfig {
  int episodes = 3000;
  double actor_lr = 1.0e-4;
  double critic_lr = 1.0e-3;
  double gamma = 0.95;
  double tau = 0.01;
  int batch_size = 128;
  int warmup_steps = 2000;
  int update_interval = 4;
  double grad_clip = 1.0;
  int hidden1 = 64;
  int hidden2 = 64;
  std::size_t replay_capacity = std::size_t{1} << 17;
  double per_alpha = 0.6;
  double per_beta0 = 0.4;
  double per_beta1 = 1.0;
  double per_eps = 1.0e-6;
  OUNoiseConfig ou;
  int exploration_off_episode = -1;  // < 0: 80% of episodes
  int lr_decay_episode = -1;         // < 0: 20% of episodes
  double lr_decay_factor = 0.5;
  int checkpoint_interval = 0;  // episodes; 0 writes only the final one
  std::uint64_t seed = 1;

  int resolved_exploration_off() const {
    return exploration_off_episode >= 0 ? exploration_off_episode
                                        : static_cast<int>(0.8 * episodes);
  }
  int resolved_lr_decay() const {
    return lr_decay_episode >= 0 ? lr_decay_episode : static_cast<int>(0.2 * episodes);
  }
  void validate() const;
};

struct AgentNets {
  nn::MlpParams actor, critic, target_actor, target_critic;
  nn::AdamState actor_opt, critic_opt;
};

struct CurvePoint {
  int episode = 0;
  double mean_step_reward = 0.0;
  double sigma = 0.0;
  double actor_lr = 0.0;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  std::string checkpoint_dir;
};

/// CTDE: every critic consumes the global state plus all agents' actions;
/// each actor consumes only its own observation.
class Trainer {
 public:
  Trainer(const World& world, const EnvParams& env_params, const TrainConfig& cfg);

  std::vector<RawAction> select_actions(const std::vector<std::vector<double>>& observations,
                                        bool explore);
  /// One IS-weighted TD step for agent i's critic; returns per-sample |delta|.
  std::vector<double> critic_update(const replay::SampleBatch& batch, int agent);
  /// Deterministic policy gradient step through agent i's critic, then Polyak
  /// updates of both targets.
  void actor_update(const replay::SampleBatch& batch, int agent);
  /// Gradient of -mean(Q_i) with respect to actor i parameters.
  nn::Gradients actor_gradient(const replay::SampleBatch& batch, int agent);

  TrainResult train(const std::string& out_dir);

  void save_checkpoint(const std::string& dir, int episodes_done) const;

  const AgentNets& nets(int i) const { return agents_[static_cast<std::size_t>(i)]; }
  AgentNets& nets_mut(int i) { return agents_[static_cast<std::size_t>(i)]; }
  Env& env() { return env_; }
  replay::PrioritizedReplay& buffer() { return buffer_; }
  double ou_sigma() const { return sigma_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  std::vector<double> joint_target_actions(const replay::Transition& tr) const;
  std::vector<double> critic_update_impl(
      const replay::SampleBatch& batch, int agent,
      const std::vector<std::vector<double>>* cached_target_actions);
  std::vector<double> slice_obs(const std::vector<double>& joint, int agent) const;

  const World* world_;
  TrainConfig cfg_;
  Env env_;
  std::vector<AgentNets> agents_;
  replay::PrioritizedReplay buffer_;
  RngStream noise_rng_;
  std::vector<std::vector<double>> noise_state_;  // per agent, action dim
  double sigma_;
  std::int64_t global_step_ = 0;
};

/// Loads the per-agent actor networks from a checkpoint directory.
std::vector<nn::MlpParams> load_actor_checkpoints(const std::string& dir);

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve);

}  // namespace uavnes::maddpg
