#include "uavnes/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace uavnes::channel {

void ChannelParams::validate() const {
  if (ref_gain <= 0.0) throw std::invalid_argument("ref_gain must be > 0");
  if (path_loss_exp < 2.0) throw std::invalid_argument("path_loss_exp must be >= 2");
  if (!(rician_g >= 0.0)) throw std::invalid_argument("rician_g must be >= 0");
  if (bandwidth_hz <= 0.0) throw std::invalid_argument("bandwidth_hz must be > 0");
  if (noise_power_w <= 0.0) throw std::invalid_argument("noise_power_w must be > 0");
  if (gbs_tx_power_w < 0.0) throw std::invalid_argument("gbs_tx_power_w must be >= 0");
  if (gbs_height_m <= 0.0) throw std::invalid_argument("gbs_height_m must be > 0");
}

double link_distance(const Vec2& uav_pos, double altitude, const Vec2& user_pos) {
  if (altitude <= 0.0) throw std::invalid_argument("altitude must be > 0");
  const Vec2 d = uav_pos - user_pos;
  return std::sqrt(altitude * altitude + d.norm_sq());
}

double sample_channel_gain(double distance, const ChannelParams& params, RngStream& rng) {
  if (distance <= 0.0) throw std::invalid_argument("distance must be > 0");
  const double large_scale = params.ref_gain * std::pow(distance, -params.path_loss_exp);
  if (std::isinf(params.rician_g)) return large_scale;  // pure LoS
  const double g = params.rician_g;
  const double los_amp = std::sqrt(g / (1.0 + g));
  const double nlos_amp = std::sqrt(1.0 / (1.0 + g));
  // CN(0,1) scatter: real and imaginary parts each N(0, 1/2).
  const double re = los_amp + nlos_amp * rng.normal() * M_SQRT1_2;
  const double im = nlos_amp * rng.normal() * M_SQRT1_2;
  return large_scale * (re * re + im * im);
}

SinrReport compute_sinr(const std::vector<double>& uav_powers, int num_active_cells,
                        const std::vector<double>& gains,
                        const std::vector<double>& required_rates,
                        const std::vector<std::uint8_t>& home_cell_active,
                        const ChannelParams& params) {
  const int n = static_cast<int>(uav_powers.size());
  const int m = static_cast<int>(required_rates.size());
  const int n_tx = n + num_active_cells;
  if (num_active_cells < 0) throw std::invalid_argument("num_active_cells must be >= 0");
  if (gains.size() != static_cast<std::size_t>(n_tx) * m) {
    throw std::invalid_argument("gains matrix has wrong dimensions");
  }
  if (home_cell_active.size() != static_cast<std::size_t>(m)) {
    throw std::invalid_argument("home_cell_active has wrong length");
  }
  for (double p : uav_powers) {
    if (p < 0.0) throw std::invalid_argument("UAV power must be >= 0");
  }

  SinrReport r;
  r.num_uavs = n;
  r.num_active_cells = num_active_cells;
  r.num_users = m;
  r.gains = gains;
  r.sinr.assign(static_cast<std::size_t>(n) * m, 0.0);
  r.rates.assign(static_cast<std::size_t>(n) * m, 0.0);
  r.assoc.assign(static_cast<std::size_t>(m), -1);
  r.served_mask.assign(static_cast<std::size_t>(m), 0);
  r.gbs_covered.assign(home_cell_active.begin(), home_cell_active.end());

  const double inv_log2 = 1.0 / std::log(2.0);
  for (int j = 0; j < m; ++j) {
    double gbs_interference = 0.0;
    for (int c = 0; c < num_active_cells; ++c) {
      gbs_interference += params.gbs_tx_power_w * r.gain(n + c, j);
    }
    for (int i = 0; i < n; ++i) {
      const double signal = uav_powers[static_cast<std::size_t>(i)] * r.gain(i, j);
      double uav_interference = 0.0;
      for (int k = 0; k < n; ++k) {
        if (k != i) uav_interference += uav_powers[static_cast<std::size_t>(k)] * r.gain(k, j);
      }
      const double denom = params.noise_power_w + uav_interference + gbs_interference;
      const double gamma = signal / denom;
      r.sinr[static_cast<std::size_t>(i) * m + j] = gamma;
      r.rates[static_cast<std::size_t>(i) * m + j] =
          params.bandwidth_hz * std::log1p(gamma) * inv_log2;
    }
    if (home_cell_active[static_cast<std::size_t>(j)]) continue;
    int best = 0;
    for (int i = 1; i < n; ++i) {
      if (r.sinr_at(i, j) > r.sinr_at(best, j)) best = i;
    }
    r.assoc[static_cast<std::size_t>(j)] = best;
    r.served_mask[static_cast<std::size_t>(j)] =
        r.rate_at(best, j) >= required_rates[static_cast<std::size_t>(j)] ? 1 : 0;
  }
  return r;
}

double total_throughput(const SinrReport& report) {
  double total = 0.0;
  for (int j = 0; j < report.num_users; ++j) {
    const int i = report.assoc[static_cast<std::size_t>(j)];
    if (i >= 0) total += report.rate_at(i, j);
  }
  return total;
}

}  // namespace uavnes::channel
