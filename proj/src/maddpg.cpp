#include "uavnes/maddpg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace uavnes::maddpg {

namespace {

using json = nlohmann::ordered_json;
constexpr int kActionDim = 3;

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<double> flatten(const std::vector<std::vector<double>>& vs) {
  std::vector<double> out;
  for (const auto& v : vs) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  if (actor_lr <= 0.0 || critic_lr <= 0.0) throw std::invalid_argument("learning rates must be > 0");
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma must be in [0,1)");
  if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("tau must be in (0,1]");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (update_interval < 1) throw std::invalid_argument("update_interval must be >= 1");
  if (hidden1 < 1 || hidden2 < 1) throw std::invalid_argument("hidden widths must be >= 1");
  if (per_alpha < 0.0 || per_eps <= 0.0) throw std::invalid_argument("bad PER settings");
  if (ou.sigma0 < 0.0 || ou.sigma_floor <= 0.0 || ou.decay <= 0.0 || ou.decay > 1.0) {
    throw std::invalid_argument("bad OU settings");
  }
  if (lr_decay_factor <= 0.0 || lr_decay_factor > 1.0) {
    throw std::invalid_argument("lr_decay_factor must be in (0,1]");
  }
}

Trainer::Trainer(const World& world, const EnvParams& env_params, const TrainConfig& cfg)
    : world_(&world),
      cfg_(cfg),
      env_(world, env_params),
      buffer_(cfg.replay_capacity, cfg.per_alpha, cfg.per_eps, mix_seed(cfg.seed, "replay")),
      noise_rng_(mix_seed(cfg.seed, "ou")),
      sigma_(cfg.ou.sigma0) {
  cfg_.validate();
  const int n = env_.num_agents();
  const int obs_dim = env_.obs_dim();
  const int critic_in = env_.global_dim() + n * kActionDim;
  for (int i = 0; i < n; ++i) {
    RngStream init_rng(mix_seed(cfg.seed, "init", static_cast<std::uint64_t>(i)));
    AgentNets a;
    nn::MlpSpec actor_spec{{obs_dim, cfg.hidden1, cfg.hidden2, kActionDim},
                           nn::OutputActivation::kSquash};
    nn::MlpSpec critic_spec{{critic_in, cfg.hidden1, cfg.hidden2, 1},
                            nn::OutputActivation::kNone};
    a.actor = nn::init_mlp(actor_spec, init_rng, 1.0e-3);
    a.critic = nn::init_mlp(critic_spec, init_rng);
    a.target_actor = a.actor;
    a.target_critic = a.critic;
    a.actor_opt = nn::AdamState::init(a.actor, cfg.actor_lr, cfg.grad_clip);
    a.critic_opt = nn::AdamState::init(a.critic, cfg.critic_lr, cfg.grad_clip);
    agents_.push_back(std::move(a));
  }
  noise_state_.assign(static_cast<std::size_t>(n),
                      std::vector<double>(kActionDim, cfg.ou.mu));
}

std::vector<double> Trainer::slice_obs(const std::vector<double>& joint, int agent) const {
  const int d = env_.obs_dim();
  return {joint.begin() + static_cast<std::ptrdiff_t>(agent) * d,
          joint.begin() + static_cast<std::ptrdiff_t>(agent + 1) * d};
}

std::vector<RawAction> Trainer::select_actions(
    const std::vector<std::vector<double>>& observations, bool explore) {
  const int n = env_.num_agents();
  std::vector<RawAction> actions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::vector<double> out =
        nn::forward(agents_[static_cast<std::size_t>(i)].actor,
                    observations[static_cast<std::size_t>(i)]);
    for (int d = 0; d < kActionDim; ++d) actions[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] = out[static_cast<std::size_t>(d)];
  }
  if (explore) {
    for (int i = 0; i < n; ++i) {
      std::vector<double>& state = noise_state_[static_cast<std::size_t>(i)];
      for (int d = 0; d < kActionDim; ++d) {
        state[static_cast<std::size_t>(d)] +=
            cfg_.ou.theta * (cfg_.ou.mu - state[static_cast<std::size_t>(d)]) +
            sigma_ * noise_rng_.normal();
        double& a = actions[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
        a = std::clamp(a + state[static_cast<std::size_t>(d)], -1.0, 1.0);
      }
    }
    sigma_ = std::max(sigma_ * cfg_.ou.decay, cfg_.ou.sigma_floor);
  }
  return actions;
}

std::vector<double> Trainer::joint_target_actions(const replay::Transition& tr) const {
  const int n = env_.num_agents();
  std::vector<double> joint;
  joint.reserve(static_cast<std::size_t>(n) * kActionDim);
  for (int k = 0; k < n; ++k) {
    const std::vector<double> a =
        nn::forward(agents_[static_cast<std::size_t>(k)].target_actor, slice_obs(tr.next_obs, k));
    joint.insert(joint.end(), a.begin(), a.end());
  }
  return joint;
}

std::vector<double> Trainer::critic_update(const replay::SampleBatch& batch, int agent) {
  return critic_update_impl(batch, agent, nullptr);
}

std::vector<double> Trainer::critic_update_impl(
    const replay::SampleBatch& batch, int agent,
    const std::vector<std::vector<double>>* cached_target_actions) {
  AgentNets& nets = agents_[static_cast<std::size_t>(agent)];
  const std::size_t b_size = batch.items.size();
  nn::Gradients grads = nn::Gradients::zeros_like(nets.critic);
  std::vector<double> td_abs(b_size, 0.0);
  std::vector<double> out_grad(1);
  std::vector<double> scratch_in;
  nn::ForwardCache cache;
  const double inv_b = 1.0 / static_cast<double>(b_size);
  for (std::size_t b = 0; b < b_size; ++b) {
    const replay::Transition& tr = *batch.items[b];
    double target = tr.rewards[static_cast<std::size_t>(agent)];
    if (!tr.done) {
      scratch_in.assign(tr.next_global_state.begin(), tr.next_global_state.end());
      if (cached_target_actions) {
        const std::vector<double>& ta = (*cached_target_actions)[b];
        scratch_in.insert(scratch_in.end(), ta.begin(), ta.end());
      } else {
        const std::vector<double> ta = joint_target_actions(tr);
        scratch_in.insert(scratch_in.end(), ta.begin(), ta.end());
      }
      target += cfg_.gamma * nn::forward(nets.target_critic, scratch_in)[0];
    }
    scratch_in.assign(tr.global_state.begin(), tr.global_state.end());
    scratch_in.insert(scratch_in.end(), tr.actions.begin(), tr.actions.end());
    const double q = nn::forward(nets.critic, scratch_in, &cache)[0];
    const double delta = q - target;
    td_abs[b] = std::abs(delta);
    // d/dq of the IS-weighted mean squared TD error.
    out_grad[0] = 2.0 * batch.weights[b] * delta * inv_b;
    nn::backward_into(nets.critic, cache, out_grad, grads);
  }
  nn::adam_step(nets.critic_opt, nets.critic, grads);
  return td_abs;
}

nn::Gradients Trainer::actor_gradient(const replay::SampleBatch& batch, int agent) {
  AgentNets& nets = agents_[static_cast<std::size_t>(agent)];
  const std::size_t b_size = batch.items.size();
  const int global_dim = env_.global_dim();
  nn::Gradients grads = nn::Gradients::zeros_like(nets.actor);
  nn::Gradients critic_grads = nn::Gradients::zeros_like(nets.critic);
  nn::ForwardCache actor_cache, critic_cache;
  std::vector<double> q_in, action_grad(kActionDim);
  const std::vector<double> neg_inv_b{-1.0 / static_cast<double>(b_size)};
  for (std::size_t b = 0; b < b_size; ++b) {
    const replay::Transition& tr = *batch.items[b];
    const std::vector<double> a_i =
        nn::forward(nets.actor, slice_obs(tr.obs, agent), &actor_cache);
    q_in.assign(tr.global_state.begin(), tr.global_state.end());
    q_in.insert(q_in.end(), tr.actions.begin(), tr.actions.end());
    std::copy(a_i.begin(), a_i.end(),
              q_in.begin() + global_dim + static_cast<std::ptrdiff_t>(agent) * kActionDim);
    nn::forward(nets.critic, q_in, &critic_cache);
    // Ascend E[Q]: loss is -mean(Q).
    critic_grads.zero();
    nn::backward_into(nets.critic, critic_cache, neg_inv_b, critic_grads);
    std::copy(critic_grads.input.begin() + global_dim + agent * kActionDim,
              critic_grads.input.begin() + global_dim + (agent + 1) * kActionDim,
              action_grad.begin());
    nn::backward_into(nets.actor, actor_cache, action_grad, grads);
  }
  return grads;
}

void Trainer::actor_update(const replay::SampleBatch& batch, int agent) {
  AgentNets& nets = agents_[static_cast<std::size_t>(agent)];
  const nn::Gradients grads = actor_gradient(batch, agent);
  nn::adam_step(nets.actor_opt, nets.actor, grads);
  nn::polyak_update(nets.target_actor, nets.actor, cfg_.tau);
  nn::polyak_update(nets.target_critic, nets.critic, cfg_.tau);
}

TrainResult Trainer::train(const std::string& out_dir) {
  const int n = env_.num_agents();
  const int t_len = world_->config.episode_length;
  const int explore_until = cfg_.resolved_exploration_off();
  const int lr_decay_at = cfg_.resolved_lr_decay();
  TrainResult result;

  for (int ep = 0; ep < cfg_.episodes; ++ep) {
    if (ep == lr_decay_at && ep > 0) {
      for (AgentNets& a : agents_) {
        a.actor_opt.lr *= cfg_.lr_decay_factor;
        a.critic_opt.lr *= cfg_.lr_decay_factor;
      }
    }
    const bool explore = ep < explore_until;
    for (auto& state : noise_state_) std::fill(state.begin(), state.end(), cfg_.ou.mu);

    std::vector<std::vector<double>> obs =
        env_.reset(mix_seed(cfg_.seed, "episode", static_cast<std::uint64_t>(ep)));
    double reward_sum = 0.0;
    for (int t = 0; t < t_len; ++t) {
      const std::vector<double> global_before = env_.global_state();
      const std::vector<RawAction> raw = select_actions(obs, explore);
      const StepOutcome out = env_.step(raw);

      replay::Transition tr;
      tr.obs = flatten(obs);
      tr.actions.reserve(static_cast<std::size_t>(n) * kActionDim);
      for (const RawAction& a : raw) tr.actions.insert(tr.actions.end(), a.begin(), a.end());
      tr.rewards = out.rewards;
      tr.next_obs = flatten(env_.observations());
      tr.global_state = global_before;
      tr.next_global_state = env_.global_state();
      tr.done = out.done;
      buffer_.push(std::move(tr));

      for (double r : out.rewards) reward_sum += r;
      obs = env_.observations();
      ++global_step_;

      if (global_step_ > cfg_.warmup_steps &&
          buffer_.size() >= static_cast<std::size_t>(cfg_.batch_size) &&
          global_step_ % cfg_.update_interval == 0) {
        const double progress =
            cfg_.episodes > 1 ? static_cast<double>(ep) / (cfg_.episodes - 1) : 1.0;
        const double beta = cfg_.per_beta0 + (cfg_.per_beta1 - cfg_.per_beta0) * progress;
        replay::SampleBatch batch =
            buffer_.sample(static_cast<std::size_t>(cfg_.batch_size), beta);
        // Target actions depend only on the (still frozen) target actors, so
        // compute them once per batch instead of once per critic.
        std::vector<std::vector<double>> target_actions(batch.items.size());
        for (std::size_t b = 0; b < batch.items.size(); ++b) {
          target_actions[b] = batch.items[b]->done ? std::vector<double>{}
                                                   : joint_target_actions(*batch.items[b]);
        }
        std::vector<double> td_mean(batch.items.size(), 0.0);
        for (int i = 0; i < n; ++i) {
          const std::vector<double> td = critic_update_impl(batch, i, &target_actions);
          for (std::size_t b = 0; b < td.size(); ++b) td_mean[b] += td[b] / n;
        }
        for (int i = 0; i < n; ++i) actor_update(batch, i);
        buffer_.update_priorities(batch.indices, td_mean);
      }
    }
    result.curve.push_back({ep, reward_sum / (t_len * n), explore ? sigma_ : 0.0,
                            agents_[0].actor_opt.lr});
    if (!out_dir.empty() && cfg_.checkpoint_interval > 0 &&
        (ep + 1) % cfg_.checkpoint_interval == 0) {
      const std::string dir = out_dir + "/checkpoint_ep" + std::to_string(ep + 1);
      save_checkpoint(dir, ep + 1);
    }
  }

  if (!out_dir.empty()) {
    result.checkpoint_dir = out_dir + "/checkpoint_final";
    save_checkpoint(result.checkpoint_dir, cfg_.episodes);
    write_curve_csv(out_dir + "/training_curve.csv", result.curve);
  }
  return result;
}

void Trainer::save_checkpoint(const std::string& dir, int episodes_done) const {
  std::filesystem::create_directories(dir);
  const int n = env_.num_agents();
  json manifest;
  manifest["format"] = "uavnes-checkpoint-v1";
  manifest["num_agents"] = n;
  manifest["obs_dim"] = env_.obs_dim();
  manifest["global_dim"] = env_.global_dim();
  manifest["action_dim"] = kActionDim;
  manifest["episodes_trained"] = episodes_done;
  manifest["world_hash"] = world_->hash;
  manifest["sigma"] = sigma_;
  json files = json::array();
  for (int i = 0; i < n; ++i) {
    const AgentNets& a = agents_[static_cast<std::size_t>(i)];
    const std::string base = dir + "/agent" + std::to_string(i);
    const std::string rng_state = noise_rng_.state_string();
    nn::save_checkpoint(base + "_actor.bin", {a.actor, a.actor_opt, rng_state, global_step_});
    nn::save_checkpoint(base + "_critic.bin", {a.critic, a.critic_opt, rng_state, global_step_});
    nn::save_checkpoint(base + "_target_actor.bin",
                        {a.target_actor, nn::AdamState::init(a.target_actor, 1.0, 0.0),
                         rng_state, global_step_});
    nn::save_checkpoint(base + "_target_critic.bin",
                        {a.target_critic, nn::AdamState::init(a.target_critic, 1.0, 0.0),
                         rng_state, global_step_});
    files.push_back("agent" + std::to_string(i) + "_actor.bin");
  }
  manifest["actor_files"] = files;
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw std::runtime_error("cannot write checkpoint manifest in " + dir);
  out << manifest.dump(2) << '\n';
}

std::vector<nn::MlpParams> load_actor_checkpoints(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw std::runtime_error("missing checkpoint manifest: " + dir + "/manifest.json");
  json manifest = json::parse(in);
  std::vector<nn::MlpParams> actors;
  for (const auto& f : manifest.at("actor_files")) {
    actors.push_back(nn::load_checkpoint(dir + "/" + f.get<std::string>()).params);
  }
  return actors;
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "episode,mean_step_reward,sigma,lr\n";
  char buf[128];
  for (const CurvePoint& p : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", p.episode, p.mean_step_reward,
                  p.sigma, p.actor_lr);
    out << buf;
  }
}

}  // namespace uavnes::maddpg
