#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uavnes/channel.hpp"
#include "uavnes/energy.hpp"
#include "uavnes/geom.hpp"
#include "uavnes/rng.hpp"
#include "uavnes/world.hpp"

namespace uavnes {

struct RewardWeights {
  double omega1 = 0.8;  // coverage weight
  double omega2 = 0.2;  // energy weight
  double gamma = 0.99;
  double lambda = 1.0e-3;  // J^-1, evaluation objective only
  void validate() const;
};

/// Mapped action: displacement in meters per step, transmit power in watts.
struct Action {
  double dx = 0.0;
  double dy = 0.0;
  double power = 0.0;
};

using RawAction = std::array<double, 3>;  // network output in [-1,1]^3

struct EnvParams {
  channel::ChannelParams channel;
  energy::EnergyParams energy;
  RewardWeights reward;
  double obs_radius_factor = 2.0;  // observation radius / cell radius
  int obs_user_slots = 6;
  std::vector<Vec2> spawn_points;  // empty: site anchors, round-robin
};

struct StepOutcome {
  std::vector<double> rewards;
  channel::SinrReport report;
  std::vector<double> uav_energy_j;  // E_i(t) = E_prop + E_comm
  bool done = false;
  double coverage_ratio = 0.0;  // served needy / needy (1 when no needy)
  int needy_count = 0;
  int uav_served_count = 0;
  int gbs_served_count = 0;
  double e_max_j = 0.0;
  double throughput_bps = 0.0;
};

/// Per-cell admission under the capacity rule: users of an active cell are
/// admitted in index order while their summed demand fits the capacity.
struct CellService {
  std::vector<std::uint8_t> cell_state;      // K
  std::vector<double> cell_load;             // K, [0,1]
  std::vector<std::uint8_t> user_admitted;   // M, GBS-served this step
  int gbs_served_count = 0;
};

CellService compute_cell_service(const World& world, int t, double capacity_bps);

/// Episode record kept for trace export and constraint audits.
struct StepRecord {
  int t = 0;
  std::vector<double> uav_x, uav_y, uav_power_w, uav_disp_norm;
  std::vector<double> uav_energy_j;
  std::vector<int> assoc;
  std::vector<double> rewards;
  double coverage_ratio = 0.0;
  int needy_count = 0;
  int gbs_served_count = 0;
  double throughput_bps = 0.0;
};

/// The POMDP: joint continuous actions in, per-agent observations, rewards,
/// and energy accounting out. One instance is owned by a single caller.
class Env {
 public:
  Env(const World& world, const EnvParams& params);

  std::vector<std::vector<double>> reset(std::uint64_t episode_seed);
  StepOutcome step(const std::vector<RawAction>& raw_actions);

  Action map_raw_action(const RawAction& raw) const;
  std::vector<Action> enforce_constraints(std::vector<Action> actions) const;

  const std::vector<std::vector<double>>& observations() const { return observations_; }
  const std::vector<double>& global_state() const { return global_state_; }
  int num_agents() const { return world_->config.num_uavs; }
  int obs_dim() const;
  int global_dim() const;
  int time() const { return t_; }
  bool done() const { return done_; }
  double e_max_j() const { return e_max_j_; }
  Vec2 uav_position(int i) const { return uav_pos_[static_cast<std::size_t>(i)]; }
  double uav_power(int i) const { return uav_power_[static_cast<std::size_t>(i)]; }

  const World& world() const { return *world_; }
  const EnvParams& params() const { return params_; }
  const energy::EpisodeTrace& trace() const { return trace_; }
  const std::vector<StepRecord>& records() const { return records_; }
  energy::EnergyLedger ledger() const { return energy::episode_ledger(trace_, params_.energy); }

  /// Eq.-17-style evaluation objective: throughput minus lambda * UAV joules.
  double episode_objective() const;

  /// One JSON object per step: positions, powers, associations, rewards, energy.
  void write_trace_jsonl(const std::string& path) const;

 private:
  void rebuild_state_vectors();

  const World* world_;
  EnvParams params_;
  double e_max_j_ = 0.0;

  int t_ = 0;
  bool done_ = true;
  std::vector<Vec2> uav_pos_;
  std::vector<double> uav_power_;
  RngStream fading_rng_{0};
  energy::EpisodeTrace trace_;
  std::vector<StepRecord> records_;
  double cum_throughput_bps_ = 0.0;
  double cum_uav_energy_j_ = 0.0;
  std::vector<std::vector<double>> observations_;
  std::vector<double> global_state_;
};

}  // namespace uavnes
