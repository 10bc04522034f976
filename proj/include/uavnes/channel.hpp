#pragma once

#include <cstdint>
#include <vector>

#include "uavnes/geom.hpp"
#include "uavnes/rng.hpp"

namespace uavnes::channel {

struct ChannelParams {
  double ref_gain = 1.0e-3;     // w0, linear power gain at 1 m
  double path_loss_exp = 3.0;   // alpha >= 2
  double rician_g = 12.0;       // linear; +inf selects the pure-LoS limit
  double bandwidth_hz = 1.0e6;  // B, per link
  double noise_power_w = 3.0e-12;
  double gbs_tx_power_w = 0.05;  // per active cell
  double gbs_height_m = 25.0;

  void validate() const;
};

/// Per-timestep link report. Transmitter rows are the N UAVs followed by the
/// active cells; SINR/rate rows cover the UAVs only.
struct SinrReport {
  int num_uavs = 0;
  int num_active_cells = 0;
  int num_users = 0;
  std::vector<double> gains;  // (num_uavs + num_active_cells) x num_users
  std::vector<double> sinr;   // num_uavs x num_users, linear
  std::vector<double> rates;  // num_uavs x num_users, bits/s
  std::vector<int> assoc;     // per user: serving UAV index, -1 if none
  std::vector<std::uint8_t> served_mask;  // UAV-associated and rate met
  std::vector<std::uint8_t> gbs_covered;  // home cell active at this step

  double gain(int tx, int j) const { return gains[static_cast<std::size_t>(tx) * num_users + j]; }
  double sinr_at(int i, int j) const { return sinr[static_cast<std::size_t>(i) * num_users + j]; }
  double rate_at(int i, int j) const { return rates[static_cast<std::size_t>(i) * num_users + j]; }
};

/// 3D UAV-to-ground distance: sqrt(H^2 + |uav_xy - user_xy|^2).
double link_distance(const Vec2& uav_pos, double altitude, const Vec2& user_pos);

/// One Rician fading draw: ref_gain * d^-alpha * |htilde|^2 where htilde mixes
/// a unit LoS term with a CN(0,1) scatter term so that E[|htilde|^2] = 1.
double sample_channel_gain(double distance, const ChannelParams& params, RngStream& rng);

/// SINR, Shannon rates, and best-SINR association. Users whose home cell is
/// active are GBS-covered and excluded from UAV association.
SinrReport compute_sinr(const std::vector<double>& uav_powers, int num_active_cells,
                        const std::vector<double>& gains,
                        const std::vector<double>& required_rates,
                        const std::vector<std::uint8_t>& home_cell_active,
                        const ChannelParams& params);

/// Sum of serving-link rates over all UAV-associated users.
double total_throughput(const SinrReport& report);

}  // namespace uavnes::channel
