#pragma once

#include <memory>
#include <string>
#include <vector>

#include "uavnes/energy.hpp"
#include "uavnes/env.hpp"
#include "uavnes/nn.hpp"
#include "uavnes/rng.hpp"

namespace uavnes::policies {

enum class PolicyKind { kMaddpgCheckpoint, kRandom, kKnnFixed, kAllCellsOn };

PolicyKind parse_policy_kind(const std::string& name);
std::string policy_name(PolicyKind kind);

/// A controller producing raw joint actions in [-1,1]^3 per agent.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void reset(const Env& env, std::uint64_t episode_seed) = 0;
  virtual std::vector<RawAction> act(const Env& env) = 0;
};

/// Uniform actions in [-1,1]^3; no relation to the objective.
class RandomPolicy : public Policy {
 public:
  std::string name() const override { return "random"; }
  void reset(const Env& env, std::uint64_t episode_seed) override;
  std::vector<RawAction> act(const Env& env) override;

 private:
  RngStream rng_{0};
};

/// Moves each UAV toward the centroid of its k nearest UAV-needed users at a
/// fixed transmit power; agents do not coordinate.
class KnnFixedPolicy : public Policy {
 public:
  explicit KnnFixedPolicy(int k_neighbors = 6, double fixed_power_w = -1.0)
      : k_(k_neighbors), fixed_power_w_(fixed_power_w) {}
  std::string name() const override { return "knn"; }
  void reset(const Env&, std::uint64_t) override {}
  std::vector<RawAction> act(const Env& env) override;

 private:
  int k_;
  double fixed_power_w_;  // < 0: p_max / num_uavs
};

/// Greedy evaluation of trained actors (no exploration noise).
class CheckpointPolicy : public Policy {
 public:
  explicit CheckpointPolicy(std::vector<nn::MlpParams> actors) : actors_(std::move(actors)) {}
  static CheckpointPolicy from_dir(const std::string& checkpoint_dir);
  std::string name() const override { return "maddpg"; }
  void reset(const Env&, std::uint64_t) override {}
  std::vector<RawAction> act(const Env& env) override;

 private:
  std::vector<nn::MlpParams> actors_;
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, const std::string& checkpoint_dir,
                                    std::uint64_t seed);

/// Reference configuration: every cell forced ON, no UAVs deployed.
struct AllCellsOnResult {
  energy::EnergyLedger ledger;
  double served_users_pct = 0.0;  // GBS-admitted user-steps over all user-steps
};

AllCellsOnResult all_cells_on_eval(const World& world, const EnvParams& params);

}  // namespace uavnes::policies
