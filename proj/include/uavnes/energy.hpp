#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uavnes/geom.hpp"

namespace uavnes::energy {

struct EnergyParams {
  double prop_quad = 0.02;   // alpha1, J per (m/step)^2
  double prop_lin = 0.35;    // alpha2, J per (m/step)
  double dt_s = 1.0;         // timestep duration
  double cell_static_w = 100.0;   // P_static per ON cell
  double cell_load_slope_w = 40.0;  // load-dependent slope
  double site_static_w = 50.0;      // overhead while any linked cell is ON
  double cell_capacity_bps = 2.0e7; // normalizes the load fraction

  /// Per-UAV per-step energy cap implied by the action bounds.
  double e_max_j(double p_max_w, double v_max) const {
    return p_max_w * dt_s + prop_quad * v_max * v_max + prop_lin * v_max;
  }
  void validate() const;
};

/// (propulsion J, communication J) for one UAV step.
std::pair<double, double> uav_step_energy(const Vec2& displacement, double power_w,
                                          const EnergyParams& params);

/// Instantaneous draw of one cell: state * (static + slope * load).
double cell_step_power(bool on, double load_fraction, const EnergyParams& params);

/// Raw per-step quantities an episode produces; the ledger integrates them.
struct EpisodeTrace {
  int num_uavs = 0;
  int num_cells = 0;
  int num_sites = 0;
  int steps = 0;
  std::vector<double> uav_disp_norm;  // N x T, m
  std::vector<double> uav_power_w;    // N x T
  std::vector<std::uint8_t> cell_state;  // K x T
  std::vector<double> cell_load;         // K x T, [0,1]
  std::vector<int> cell_site;            // K, owning site

  void append_step(const std::vector<double>& disp, const std::vector<double>& power,
                   const std::vector<std::uint8_t>& state, const std::vector<double>& load);
};

/// Per-entity per-step energy in joules plus watt-hour totals.
struct EnergyLedger {
  int num_uavs = 0;
  int num_cells = 0;
  int num_sites = 0;
  int steps = 0;
  std::vector<double> uav_prop_j;  // N x T
  std::vector<double> uav_comm_j;  // N x T
  std::vector<double> cell_j;      // K x T
  std::vector<double> site_j;      // S x T

  double uav_step_j(int i, int t) const {
    return uav_prop_j[static_cast<std::size_t>(i) * steps + t] +
           uav_comm_j[static_cast<std::size_t>(i) * steps + t];
  }
  double uav_total_j(int i) const;
  double uav_fleet_j() const;
  double cell_total_j() const;
  double site_total_j() const;

  static double to_wh(double joules) { return joules / 3600.0; }
  double e_uav_wh() const { return to_wh(uav_fleet_j()); }
  double e_cell_wh() const { return to_wh(cell_total_j()); }
  double e_site_wh() const { return to_wh(site_total_j()); }
  /// Network-side total: sum of cell energies plus site overheads.
  double e_total_wh() const { return to_wh(cell_total_j() + site_total_j()); }

  /// Flat CSV: entity_id, kind, t, watts, joules.
  void write_csv(const std::string& path, double dt_s) const;
};

EnergyLedger episode_ledger(const EpisodeTrace& trace, const EnergyParams& params);

}  // namespace uavnes::energy
