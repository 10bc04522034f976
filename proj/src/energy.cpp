#include "uavnes/energy.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace uavnes::energy {

void EnergyParams::validate() const {
  if (prop_quad < 0.0 || prop_lin < 0.0) throw std::invalid_argument("propulsion coefficients must be >= 0");
  if (dt_s <= 0.0) throw std::invalid_argument("dt must be > 0");
  if (cell_static_w < 0.0 || cell_load_slope_w < 0.0 || site_static_w < 0.0) {
    throw std::invalid_argument("power parameters must be >= 0");
  }
  if (cell_capacity_bps <= 0.0) throw std::invalid_argument("cell_capacity must be > 0");
}

std::pair<double, double> uav_step_energy(const Vec2& displacement, double power_w,
                                          const EnergyParams& params) {
  if (power_w < 0.0) throw std::invalid_argument("power must be >= 0");
  const double d = displacement.norm();
  const double e_prop = params.prop_quad * d * d + params.prop_lin * d;
  const double e_comm = power_w * params.dt_s;
  return {e_prop, e_comm};
}

double cell_step_power(bool on, double load_fraction, const EnergyParams& params) {
  if (load_fraction < 0.0 || load_fraction > 1.0) {
    throw std::invalid_argument("load fraction must be in [0,1]");
  }
  if (!on) return 0.0;
  return params.cell_static_w + params.cell_load_slope_w * load_fraction;
}

void EpisodeTrace::append_step(const std::vector<double>& disp, const std::vector<double>& power,
                               const std::vector<std::uint8_t>& state,
                               const std::vector<double>& load) {
  if (static_cast<int>(disp.size()) != num_uavs || static_cast<int>(power.size()) != num_uavs ||
      static_cast<int>(state.size()) != num_cells || static_cast<int>(load.size()) != num_cells) {
    throw std::invalid_argument("trace step has inconsistent lengths");
  }
  uav_disp_norm.insert(uav_disp_norm.end(), disp.begin(), disp.end());
  uav_power_w.insert(uav_power_w.end(), power.begin(), power.end());
  cell_state.insert(cell_state.end(), state.begin(), state.end());
  cell_load.insert(cell_load.end(), load.begin(), load.end());
  ++steps;
}

double EnergyLedger::uav_total_j(int i) const {
  double s = 0.0;
  for (int t = 0; t < steps; ++t) s += uav_step_j(i, t);
  return s;
}

double EnergyLedger::uav_fleet_j() const {
  double s = 0.0;
  for (int i = 0; i < num_uavs; ++i) s += uav_total_j(i);
  return s;
}

double EnergyLedger::cell_total_j() const {
  double s = 0.0;
  for (double e : cell_j) s += e;
  return s;
}

double EnergyLedger::site_total_j() const {
  double s = 0.0;
  for (double e : site_j) s += e;
  return s;
}

void EnergyLedger::write_csv(const std::string& path, double dt_s) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "entity_id,kind,t,watts,joules\n";
  char buf[160];
  auto emit = [&](int id, const char* kind, int t, double joules) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%d,%.17g,%.17g\n", id, kind, t, joules / dt_s,
                  joules);
    out << buf;
  };
  for (int i = 0; i < num_uavs; ++i) {
    for (int t = 0; t < steps; ++t) emit(i, "uav", t, uav_step_j(i, t));
  }
  for (int k = 0; k < num_cells; ++k) {
    for (int t = 0; t < steps; ++t) emit(k, "cell", t, cell_j[static_cast<std::size_t>(k) * steps + t]);
  }
  for (int s = 0; s < num_sites; ++s) {
    for (int t = 0; t < steps; ++t) emit(s, "site", t, site_j[static_cast<std::size_t>(s) * steps + t]);
  }
}

EnergyLedger episode_ledger(const EpisodeTrace& trace, const EnergyParams& params) {
  params.validate();
  const int n = trace.num_uavs, k_cells = trace.num_cells, t_len = trace.steps;
  const auto expect = [t_len](std::size_t got, int per_step, const char* what) {
    if (got != static_cast<std::size_t>(per_step) * t_len) {
      throw std::invalid_argument(std::string("trace length mismatch for ") + what);
    }
  };
  // Trace rows are stored step-major (append_step), ledger is entity-major.
  expect(trace.uav_disp_norm.size(), n, "uav displacement");
  expect(trace.uav_power_w.size(), n, "uav power");
  expect(trace.cell_state.size(), k_cells, "cell state");
  expect(trace.cell_load.size(), k_cells, "cell load");
  if (static_cast<int>(trace.cell_site.size()) != k_cells) {
    throw std::invalid_argument("cell_site length mismatch");
  }

  EnergyLedger ledger;
  ledger.num_uavs = n;
  ledger.num_cells = k_cells;
  ledger.num_sites = trace.num_sites;
  ledger.steps = t_len;
  ledger.uav_prop_j.assign(static_cast<std::size_t>(n) * t_len, 0.0);
  ledger.uav_comm_j.assign(static_cast<std::size_t>(n) * t_len, 0.0);
  ledger.cell_j.assign(static_cast<std::size_t>(k_cells) * t_len, 0.0);
  ledger.site_j.assign(static_cast<std::size_t>(trace.num_sites) * t_len, 0.0);

  for (int t = 0; t < t_len; ++t) {
    for (int i = 0; i < n; ++i) {
      const double d = trace.uav_disp_norm[static_cast<std::size_t>(t) * n + i];
      const double p = trace.uav_power_w[static_cast<std::size_t>(t) * n + i];
      ledger.uav_prop_j[static_cast<std::size_t>(i) * t_len + t] =
          params.prop_quad * d * d + params.prop_lin * d;
      ledger.uav_comm_j[static_cast<std::size_t>(i) * t_len + t] = p * params.dt_s;
    }
    std::vector<std::uint8_t> site_on(static_cast<std::size_t>(trace.num_sites), 0);
    for (int k = 0; k < k_cells; ++k) {
      const bool on = trace.cell_state[static_cast<std::size_t>(t) * k_cells + k] != 0;
      const double load = trace.cell_load[static_cast<std::size_t>(t) * k_cells + k];
      ledger.cell_j[static_cast<std::size_t>(k) * t_len + t] =
          cell_step_power(on, load, params) * params.dt_s;
      if (on) site_on[static_cast<std::size_t>(trace.cell_site[static_cast<std::size_t>(k)])] = 1;
    }
    for (int s = 0; s < trace.num_sites; ++s) {
      if (site_on[static_cast<std::size_t>(s)]) {
        ledger.site_j[static_cast<std::size_t>(s) * t_len + t] = params.site_static_w * params.dt_s;
      }
    }
  }
  return ledger;
}

}  // namespace uavnes::energy
