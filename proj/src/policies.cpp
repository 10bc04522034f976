#include "uavnes/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uavnes/maddpg.hpp"

namespace uavnes::policies {

PolicyKind parse_policy_kind(const std::string& name) {
  if (name == "maddpg") return PolicyKind::kMaddpgCheckpoint;
  if (name == "random") return PolicyKind::kRandom;
  if (name == "knn") return PolicyKind::kKnnFixed;
  if (name == "allon") return PolicyKind::kAllCellsOn;
  throw std::invalid_argument("unknown policy: " + name +
                              " (expected maddpg|random|knn|allon)");
}

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kMaddpgCheckpoint: return "maddpg";
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kKnnFixed: return "knn";
    case PolicyKind::kAllCellsOn: return "allon";
  }
  return "?";
}

void RandomPolicy::reset(const Env& env, std::uint64_t episode_seed) {
  (void)env;
  rng_ = RngStream(mix_seed(episode_seed, "random-policy"));
}

std::vector<RawAction> RandomPolicy::act(const Env& env) {
  std::vector<RawAction> actions(static_cast<std::size_t>(env.num_agents()));
  for (RawAction& a : actions) {
    for (double& v : a) v = rng_.uniform(-1.0, 1.0);
  }
  return actions;
}

std::vector<RawAction> KnnFixedPolicy::act(const Env& env) {
  const World& w = env.world();
  const ScenarioConfig& cfg = w.config;
  const int n = env.num_agents();
  const int t = std::min(env.time(), cfg.episode_length - 1);
  const std::vector<int> needy = w.needy_users(t);
  const double power_w = fixed_power_w_ >= 0.0 ? fixed_power_w_ : cfg.p_max / n;
  const double power_raw = 2.0 * power_w / cfg.p_max - 1.0;

  std::vector<RawAction> actions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    RawAction& a = actions[static_cast<std::size_t>(i)];
    a = {0.0, 0.0, power_raw};
    if (needy.empty()) continue;  // hover and hold power
    const Vec2 pos = env.uav_position(i);
    std::vector<std::pair<double, int>> by_distance;
    by_distance.reserve(needy.size());
    for (int j : needy) {
      by_distance.emplace_back(distance(pos, w.users[static_cast<std::size_t>(j)].position), j);
    }
    std::sort(by_distance.begin(), by_distance.end());
    const int take = std::min<int>(k_, static_cast<int>(by_distance.size()));
    Vec2 centroid{0.0, 0.0};
    for (int s = 0; s < take; ++s) {
      centroid = centroid + w.users[static_cast<std::size_t>(by_distance[static_cast<std::size_t>(s)].second)].position;
    }
    centroid = centroid * (1.0 / take);
    Vec2 step = centroid - pos;
    const double norm = step.norm();
    // Tiny headroom so the raw -> mapped round trip cannot round past v_max
    // and the action survives constraint enforcement bit-identically.
    const double cap = cfg.v_max * (1.0 - 1e-13);
    if (norm > cap) step = step * (cap / norm);
    a[0] = step.x / cfg.v_max;
    a[1] = step.y / cfg.v_max;
  }
  return actions;
}

CheckpointPolicy CheckpointPolicy::from_dir(const std::string& checkpoint_dir) {
  return CheckpointPolicy(maddpg::load_actor_checkpoints(checkpoint_dir));
}

std::vector<RawAction> CheckpointPolicy::act(const Env& env) {
  const int n = env.num_agents();
  if (static_cast<int>(actors_.size()) != n) {
    throw std::runtime_error("checkpoint has " + std::to_string(actors_.size()) +
                             " actors but the scenario has " + std::to_string(n) + " UAVs");
  }
  std::vector<RawAction> actions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::vector<double> out =
        nn::forward(actors_[static_cast<std::size_t>(i)], env.observations()[static_cast<std::size_t>(i)]);
    actions[static_cast<std::size_t>(i)] = {out[0], out[1], out[2]};
  }
  return actions;
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, const std::string& checkpoint_dir,
                                    std::uint64_t seed) {
  (void)seed;
  switch (kind) {
    case PolicyKind::kRandom: return std::make_unique<RandomPolicy>();
    case PolicyKind::kKnnFixed: return std::make_unique<KnnFixedPolicy>();
    case PolicyKind::kMaddpgCheckpoint:
      if (checkpoint_dir.empty()) {
        throw std::invalid_argument("maddpg policy requires --checkpoint");
      }
      return std::make_unique<CheckpointPolicy>(CheckpointPolicy::from_dir(checkpoint_dir));
    case PolicyKind::kAllCellsOn:
      throw std::invalid_argument("allon is a reference configuration, not a UAV policy");
  }
  throw std::logic_error("unreachable");
}

AllCellsOnResult all_cells_on_eval(const World& world, const EnvParams& params) {
  const World all_on = world.with_all_on_schedule();
  const int t_len = all_on.config.episode_length;
  const int m = all_on.num_users();

  energy::EpisodeTrace trace;
  trace.num_uavs = 0;
  trace.num_cells = all_on.num_cells();
  trace.num_sites = all_on.num_sites();
  for (const Cell& c : all_on.cells) trace.cell_site.push_back(c.site_id);

  long served_user_steps = 0;
  const std::vector<double> no_uavs;
  for (int t = 0; t < t_len; ++t) {
    const CellService s = compute_cell_service(all_on, t, params.energy.cell_capacity_bps);
    trace.append_step(no_uavs, no_uavs, s.cell_state, s.cell_load);
    served_user_steps += s.gbs_served_count;
  }

  AllCellsOnResult result;
  result.ledger = energy::episode_ledger(trace, params.energy);
  result.served_users_pct =
      100.0 * static_cast<double>(served_user_steps) / (static_cast<double>(t_len) * m);
  return result;
}

}  // namespace uavnes::policies
