#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uavnes/config.hpp"
#include "uavnes/env.hpp"
#include "uavnes/maddpg.hpp"
#include "uavnes/policies.hpp"
#include "uavnes/world.hpp"

namespace uavnes::harness {

inline constexpr const char* kCodeVersion = "uavnes 0.1.0";

struct ConstraintAudit {
  long steps_checked = 0;
  long violations = 0;
  double max_disp_ratio = 0.0;   // ||dq|| / v_max
  double max_power_ratio = 0.0;  // P_i / P_max
  double max_fleet_ratio = 0.0;  // sum P_i / fleet cap
};

struct EvalReport {
  std::string method;
  std::uint64_t world_hash = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int episodes = 0;
  std::vector<double> coverage_per_episode;
  std::vector<double> reward_per_step;  // length T, averaged over episodes and agents
  double mean_coverage = 0.0;
  double mean_step_reward = 0.0;
  double served_users_pct = 0.0;
  double e_uav_wh = 0.0;      // mean per episode
  double e_cell_wh = 0.0;     // cells only
  double e_site_wh = 0.0;     // site overheads
  double e_network_wh = 0.0;  // cells + sites
  double e_total_wh = 0.0;    // UAVs + network
  double episode_objective = 0.0;
  ConstraintAudit audit;

  void save_json(const std::string& path) const;
  static EvalReport load_json(const std::string& path);
};

/// Fixed-seed evaluation episodes with exploration off; episode seeds depend
/// only on (seed, episode index) so different methods stay comparable. When
/// trace_path is set, the first episode's JSONL trace is written there.
EvalReport run_eval(const World& world, policies::Policy& policy, const EnvParams& params,
                    int episodes, std::uint64_t seed, const std::string& trace_path = "",
                    const std::string& ledger_csv_path = "");

/// All-cells-ON reference wrapped into the same report shape (no UAVs).
EvalReport run_all_on_eval(const World& world, const EnvParams& params);

/// Five-column comparison; savings are computed against the maddpg row and,
/// when present, the allon row. Throws when world hashes differ.
std::string energy_table_text(const std::vector<EvalReport>& reports);
void write_energy_table_csv(const std::string& path, const std::vector<EvalReport>& reports);

void write_manifest(const std::string& path, const Config& config, std::uint64_t world_hash,
                    const std::string& kind, std::uint64_t seed, int episodes);

/// Plot-ready data: reward_curve.csv, eval_reward_per_step.csv,
/// coverage_per_episode.csv, energy_table.csv, manifest.json.
void emit_curves(const std::vector<maddpg::CurvePoint>& curve,
                 const std::vector<EvalReport>& reports, const Config& config,
                 const std::string& out_dir);

// Small statistics helpers used by the evaluation harness.
double mean(const std::vector<double>& xs);
double variance(const std::vector<double>& xs);  // sample variance
/// One-sided paired t-test of H1: mean(a) > mean(b); returns {t, p}.
struct PairedTResult {
  double t = 0.0;
  double p = 1.0;
};
PairedTResult paired_t_test_greater(const std::vector<double>& a, const std::vector<double>& b);
/// OLS slope of y against 0..n-1 with its standard error.
struct SlopeFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
};
SlopeFit ols_slope(const std::vector<double>& ys);

double incomplete_beta(double a, double b, double x);  // regularized I_x(a,b)

}  // namespace uavnes::harness
