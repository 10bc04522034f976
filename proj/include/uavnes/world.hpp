#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uavnes/geom.hpp"

namespace uavnes {

enum class ScheduleMode { kFile, kRandomFraction };

enum class TrafficProfile { kStreamingLike = 0, kConferencingLike = 1 };

struct TrafficConfig {
  double base_rate_mean = 2.0e6;    // bits/s
  double base_rate_spread = 1.0e6;  // bits/s, log-uniform half-range
  double surge_multiplier = 2.0;
  double surge_on_prob = 0.02;   // per-step OFF -> ON
  double surge_off_prob = 0.15;  // per-step ON -> OFF
  double profile_mix_streaming = 0.5;
  double profile_mix_conferencing = 0.5;
};

struct ScenarioConfig {
  double area_half_width = 600.0;  // m
  int num_sites = 3;               // 3 cells each
  double cell_radius = 120.0;      // m, hexagon circumradius
  int num_uavs = 2;
  int num_users = 30;
  double uav_altitude = 100.0;  // m
  double v_max = 30.0;          // m per step
  double p_max = 2.0;           // W, per-UAV and fleet bound
  double fleet_p_max = -1.0;    // W; < 0 means use p_max
  int episode_length = 100;     // steps
  double dt = 1.0;              // s
  TrafficConfig traffic;
  ScheduleMode schedule_mode = ScheduleMode::kRandomFraction;
  std::string schedule_file;
  double sleep_fraction = 1.0 / 3.0;
  int sleep_switch_step = -1;  // < 0 disables the mid-episode switch
  std::uint64_t seed = 1;

  double fleet_power_cap() const { return fleet_p_max > 0.0 ? fleet_p_max : p_max; }
  void validate() const;  // throws std::invalid_argument
};

struct Cell {
  int id = 0;
  int site_id = 0;
  Vec2 center;
  double radius = 0.0;
};

struct Site {
  int id = 0;
  Vec2 anchor;  // shared vertex of the site's three cells
  std::array<int, 3> cells{};
};

struct User {
  int id = 0;
  Vec2 position;
  int home_cell = 0;
  TrafficProfile profile = TrafficProfile::kStreamingLike;
  double base_rate = 0.0;  // bits/s
};

/// Immutable scenario: geometry, sleep schedule, and pre-sampled demand
/// profiles. Fully determined by the config (including its seed).
struct World {
  ScenarioConfig config;
  std::vector<Site> sites;
  std::vector<Cell> cells;
  std::vector<User> users;
  std::vector<std::uint8_t> schedule;  // K x T, schedule[k * T + t]
  std::vector<double> demand;          // M x T, bits/s
  double max_demand = 0.0;
  std::uint64_t hash = 0;

  int num_cells() const { return static_cast<int>(cells.size()); }
  int num_users() const { return static_cast<int>(users.size()); }
  int num_sites() const { return static_cast<int>(sites.size()); }
  int episode_length() const { return config.episode_length; }

  bool cell_on(int k, int t) const;
  std::vector<int> inactive_cells(int t) const;
  double demand_at(int j, int t) const;
  /// Users whose home cell is OFF at t (candidates for UAV service).
  std::vector<int> needy_users(int t) const;

  /// Copy of this world with every cell forced ON (reference configuration).
  World with_all_on_schedule() const;
};

World build_world(const ScenarioConfig& config);

/// Parses a K-rows x T-columns comma-separated {0,1} matrix.
std::vector<std::uint8_t> load_schedule_file(const std::string& path, int num_cells,
                                             int episode_length);

}  // namespace uavnes
