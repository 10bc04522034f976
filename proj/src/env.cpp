#include "uavnes/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace uavnes {

namespace {

using json = nlohmann::ordered_json;

/// Scales vec down until sum(vec) <= cap; no-op when already feasible, which
/// makes the projection a fixed point under repeated application.
void scale_to_budget(std::vector<double>& values, double cap, double total) {
  for (int iter = 0; iter < 4 && total > cap; ++iter) {
    const double scale = cap / total;
    total = 0.0;
    for (double& v : values) {
      v *= scale;
      total += v;
    }
  }
}

}  // namespace

void RewardWeights::validate() const {
  if (omega1 < 0.0 || omega2 < 0.0) throw std::invalid_argument("reward weights must be >= 0");
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma must be in [0,1)");
}

CellService compute_cell_service(const World& world, int t, double capacity_bps) {
  const int k_cells = world.num_cells();
  const int m = world.num_users();
  CellService s;
  s.cell_state.assign(static_cast<std::size_t>(k_cells), 0);
  s.cell_load.assign(static_cast<std::size_t>(k_cells), 0.0);
  s.user_admitted.assign(static_cast<std::size_t>(m), 0);

  std::vector<double> admitted_demand(static_cast<std::size_t>(k_cells), 0.0);
  for (int k = 0; k < k_cells; ++k) {
    s.cell_state[static_cast<std::size_t>(k)] = world.cell_on(k, t) ? 1 : 0;
  }
  for (int j = 0; j < m; ++j) {
    const int k = world.users[static_cast<std::size_t>(j)].home_cell;
    if (!s.cell_state[static_cast<std::size_t>(k)]) continue;
    const double d = world.demand_at(j, t);
    if (admitted_demand[static_cast<std::size_t>(k)] + d <= capacity_bps) {
      admitted_demand[static_cast<std::size_t>(k)] += d;
      s.user_admitted[static_cast<std::size_t>(j)] = 1;
      ++s.gbs_served_count;
    }
  }
  for (int k = 0; k < k_cells; ++k) {
    if (s.cell_state[static_cast<std::size_t>(k)]) {
      s.cell_load[static_cast<std::size_t>(k)] =
          std::min(1.0, admitted_demand[static_cast<std::size_t>(k)] / capacity_bps);
    }
  }
  return s;
}

Env::Env(const World& world, const EnvParams& params) : world_(&world), params_(params) {
  params_.channel.validate();
  params_.energy.validate();
  params_.reward.validate();
  if (params_.obs_user_slots < 0) throw std::invalid_argument("obs_user_slots must be >= 0");
  e_max_j_ = params_.energy.e_max_j(world.config.p_max, world.config.v_max);
}

int Env::obs_dim() const {
  const int n = num_agents();
  return 3 + 3 * (n - 1) + 4 * params_.obs_user_slots + world_->num_cells();
}

int Env::global_dim() const {
  return 3 * num_agents() + 3 * world_->num_users() + world_->num_cells();
}

std::vector<std::vector<double>> Env::reset(std::uint64_t episode_seed) {
  const ScenarioConfig& cfg = world_->config;
  uav_pos_.clear();
  uav_power_.assign(static_cast<std::size_t>(cfg.num_uavs), 0.0);
  for (int i = 0; i < cfg.num_uavs; ++i) {
    if (!params_.spawn_points.empty()) {
      uav_pos_.push_back(
          params_.spawn_points[static_cast<std::size_t>(i) % params_.spawn_points.size()]);
    } else {
      uav_pos_.push_back(world_->sites[static_cast<std::size_t>(i % world_->num_sites())].anchor);
    }
  }
  fading_rng_ = RngStream(mix_seed(episode_seed, "fading"));
  t_ = 0;
  done_ = false;
  trace_ = energy::EpisodeTrace{};
  trace_.num_uavs = cfg.num_uavs;
  trace_.num_cells = world_->num_cells();
  trace_.num_sites = world_->num_sites();
  trace_.cell_site.clear();
  for (const Cell& c : world_->cells) trace_.cell_site.push_back(c.site_id);
  records_.clear();
  cum_throughput_bps_ = 0.0;
  cum_uav_energy_j_ = 0.0;
  rebuild_state_vectors();
  return observations_;
}

Action Env::map_raw_action(const RawAction& raw) const {
  auto unit = [](double v) { return std::clamp(v, -1.0, 1.0); };
  const ScenarioConfig& cfg = world_->config;
  Action a;
  a.dx = unit(raw[0]) * cfg.v_max;
  a.dy = unit(raw[1]) * cfg.v_max;
  a.power = (unit(raw[2]) + 1.0) * 0.5 * cfg.p_max;
  return a;
}

std::vector<Action> Env::enforce_constraints(std::vector<Action> actions) const {
  const ScenarioConfig& cfg = world_->config;
  double power_sum = 0.0;
  for (Action& a : actions) {
    const double n = std::hypot(a.dx, a.dy);
    if (n > cfg.v_max) {
      // Radial projection onto the velocity ball; may need a second pass for
      // the last-ulp rounding of the scale factor.
      double scale = cfg.v_max / n;
      a.dx *= scale;
      a.dy *= scale;
      for (int iter = 0; iter < 3 && std::hypot(a.dx, a.dy) > cfg.v_max; ++iter) {
        scale = cfg.v_max / std::hypot(a.dx, a.dy);
        a.dx *= scale;
        a.dy *= scale;
      }
    }
    a.power = std::clamp(a.power, 0.0, cfg.p_max);
    power_sum += a.power;
  }
  const double cap = cfg.fleet_power_cap();
  if (power_sum > cap) {
    std::vector<double> powers;
    powers.reserve(actions.size());
    for (const Action& a : actions) powers.push_back(a.power);
    scale_to_budget(powers, cap, power_sum);
    for (std::size_t i = 0; i < actions.size(); ++i) actions[i].power = powers[i];
  }
  return actions;
}

StepOutcome Env::step(const std::vector<RawAction>& raw_actions) {
  if (done_) throw std::logic_error("step called on a finished episode");
  const ScenarioConfig& cfg = world_->config;
  const int n = num_agents();
  const int m = world_->num_users();
  if (static_cast<int>(raw_actions.size()) != n) {
    throw std::invalid_argument("need one action per UAV");
  }

  std::vector<Action> actions;
  actions.reserve(static_cast<std::size_t>(n));
  for (const RawAction& r : raw_actions) actions.push_back(map_raw_action(r));
  actions = enforce_constraints(std::move(actions));

  std::vector<double> disp_norm(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const Action& a = actions[static_cast<std::size_t>(i)];
    const Vec2 target = uav_pos_[static_cast<std::size_t>(i)] + Vec2{a.dx, a.dy};
    const Vec2 next = clamp_to_box(target, cfg.area_half_width);
    disp_norm[static_cast<std::size_t>(i)] = (next - uav_pos_[static_cast<std::size_t>(i)]).norm();
    uav_pos_[static_cast<std::size_t>(i)] = next;
    uav_power_[static_cast<std::size_t>(i)] = a.power;
  }

  const int t = t_;
  const CellService service = compute_cell_service(*world_, t, params_.energy.cell_capacity_bps);
  std::vector<int> active_cells;
  for (int k = 0; k < world_->num_cells(); ++k) {
    if (service.cell_state[static_cast<std::size_t>(k)]) active_cells.push_back(k);
  }
  const int n_active = static_cast<int>(active_cells.size());

  // Fading redrawn i.i.d. per step: UAV rows first, then active cells,
  // users in index order within each row.
  std::vector<double> gains(static_cast<std::size_t>(n + n_active) * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double d = channel::link_distance(uav_pos_[static_cast<std::size_t>(i)],
                                              cfg.uav_altitude,
                                              world_->users[static_cast<std::size_t>(j)].position);
      gains[static_cast<std::size_t>(i) * m + j] =
          channel::sample_channel_gain(d, params_.channel, fading_rng_);
    }
  }
  for (int c = 0; c < n_active; ++c) {
    const Cell& cell = world_->cells[static_cast<std::size_t>(active_cells[static_cast<std::size_t>(c)])];
    for (int j = 0; j < m; ++j) {
      const double d = channel::link_distance(cell.center, params_.channel.gbs_height_m,
                                              world_->users[static_cast<std::size_t>(j)].position);
      gains[static_cast<std::size_t>(n + c) * m + j] =
          channel::sample_channel_gain(d, params_.channel, fading_rng_);
    }
  }

  std::vector<double> demands(static_cast<std::size_t>(m));
  std::vector<std::uint8_t> home_active(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    demands[static_cast<std::size_t>(j)] = world_->demand_at(j, t);
    home_active[static_cast<std::size_t>(j)] =
        service.cell_state[static_cast<std::size_t>(world_->users[static_cast<std::size_t>(j)].home_cell)];
  }

  StepOutcome out;
  out.report = channel::compute_sinr(uav_power_, n_active, gains, demands, home_active,
                                     params_.channel);
  out.e_max_j = e_max_j_;

  out.uav_energy_j.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> prop_j(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double d = disp_norm[static_cast<std::size_t>(i)];
    prop_j[static_cast<std::size_t>(i)] =
        params_.energy.prop_quad * d * d + params_.energy.prop_lin * d;
    out.uav_energy_j[static_cast<std::size_t>(i)] =
        prop_j[static_cast<std::size_t>(i)] + uav_power_[static_cast<std::size_t>(i)] * params_.energy.dt_s;
    cum_uav_energy_j_ += out.uav_energy_j[static_cast<std::size_t>(i)];
  }

  out.needy_count = 0;
  out.uav_served_count = 0;
  std::vector<int> served_by(static_cast<std::size_t>(n), 0);
  for (int j = 0; j < m; ++j) {
    if (home_active[static_cast<std::size_t>(j)]) continue;
    ++out.needy_count;
    if (out.report.served_mask[static_cast<std::size_t>(j)]) {
      ++out.uav_served_count;
      ++served_by[static_cast<std::size_t>(out.report.assoc[static_cast<std::size_t>(j)])];
    }
  }
  out.gbs_served_count = service.gbs_served_count;
  out.coverage_ratio = out.needy_count > 0
                           ? static_cast<double>(out.uav_served_count) / out.needy_count
                           : 1.0;

  out.rewards.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double coverage =
        out.needy_count > 0
            ? static_cast<double>(served_by[static_cast<std::size_t>(i)]) / out.needy_count
            : 1.0;
    const double energy_frac = out.uav_energy_j[static_cast<std::size_t>(i)] / e_max_j_;
    out.rewards[static_cast<std::size_t>(i)] =
        params_.reward.omega1 * coverage + params_.reward.omega2 * (1.0 - energy_frac);
  }

  out.throughput_bps = channel::total_throughput(out.report);
  cum_throughput_bps_ += out.throughput_bps;

  trace_.append_step(disp_norm, uav_power_, service.cell_state, service.cell_load);

  StepRecord rec;
  rec.t = t;
  for (int i = 0; i < n; ++i) {
    rec.uav_x.push_back(uav_pos_[static_cast<std::size_t>(i)].x);
    rec.uav_y.push_back(uav_pos_[static_cast<std::size_t>(i)].y);
    rec.uav_power_w.push_back(uav_power_[static_cast<std::size_t>(i)]);
    rec.uav_disp_norm.push_back(disp_norm[static_cast<std::size_t>(i)]);
    rec.uav_energy_j.push_back(out.uav_energy_j[static_cast<std::size_t>(i)]);
  }
  rec.assoc = out.report.assoc;
  rec.rewards = out.rewards;
  rec.coverage_ratio = out.coverage_ratio;
  rec.needy_count = out.needy_count;
  rec.gbs_served_count = out.gbs_served_count;
  rec.throughput_bps = out.throughput_bps;
  records_.push_back(std::move(rec));

  ++t_;
  done_ = t_ == cfg.episode_length;
  out.done = done_;
  rebuild_state_vectors();
  return out;
}

void Env::rebuild_state_vectors() {
  const ScenarioConfig& cfg = world_->config;
  const int n = num_agents();
  const int m = world_->num_users();
  const int k_cells = world_->num_cells();
  const int t = std::min(t_, cfg.episode_length - 1);
  const double inv_area = 1.0 / cfg.area_half_width;
  const double obs_radius = params_.obs_radius_factor * cfg.cell_radius;

  auto power_norm = [&cfg](double p) { return 2.0 * p / cfg.p_max - 1.0; };
  auto demand_norm = [this](double r) { return 2.0 * r / world_->max_demand - 1.0; };

  const std::vector<int> needy = world_->needy_users(t);

  observations_.assign(static_cast<std::size_t>(n), {});
  for (int i = 0; i < n; ++i) {
    std::vector<double>& obs = observations_[static_cast<std::size_t>(i)];
    obs.reserve(static_cast<std::size_t>(obs_dim()));
    const Vec2 own = uav_pos_[static_cast<std::size_t>(i)];
    obs.push_back(own.x * inv_area);
    obs.push_back(own.y * inv_area);
    obs.push_back(power_norm(uav_power_[static_cast<std::size_t>(i)]));
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      obs.push_back(uav_pos_[static_cast<std::size_t>(k)].x * inv_area);
      obs.push_back(uav_pos_[static_cast<std::size_t>(k)].y * inv_area);
      obs.push_back(power_norm(uav_power_[static_cast<std::size_t>(k)]));
    }
    // Six nearest needy users inside the observation radius.
    std::vector<std::pair<double, int>> in_range;
    for (int j : needy) {
      const double d = distance(own, world_->users[static_cast<std::size_t>(j)].position);
      if (d <= obs_radius) in_range.emplace_back(d, j);
    }
    std::sort(in_range.begin(), in_range.end());
    for (int slot = 0; slot < params_.obs_user_slots; ++slot) {
      if (slot < static_cast<int>(in_range.size())) {
        const User& u = world_->users[static_cast<std::size_t>(in_range[static_cast<std::size_t>(slot)].second)];
        obs.push_back(u.position.x * inv_area);
        obs.push_back(u.position.y * inv_area);
        obs.push_back(demand_norm(world_->demand_at(u.id, t)));
        obs.push_back(1.0);
      } else {
        obs.insert(obs.end(), {0.0, 0.0, 0.0, 0.0});
      }
    }
    for (int k = 0; k < k_cells; ++k) obs.push_back(world_->cell_on(k, t) ? 1.0 : -1.0);
  }

  global_state_.clear();
  global_state_.reserve(static_cast<std::size_t>(global_dim()));
  for (int i = 0; i < n; ++i) {
    global_state_.push_back(uav_pos_[static_cast<std::size_t>(i)].x * inv_area);
    global_state_.push_back(uav_pos_[static_cast<std::size_t>(i)].y * inv_area);
    global_state_.push_back(power_norm(uav_power_[static_cast<std::size_t>(i)]));
  }
  for (int j = 0; j < m; ++j) {
    const User& u = world_->users[static_cast<std::size_t>(j)];
    global_state_.push_back(u.position.x * inv_area);
    global_state_.push_back(u.position.y * inv_area);
    global_state_.push_back(demand_norm(world_->demand_at(j, t)));
  }
  for (int k = 0; k < k_cells; ++k) global_state_.push_back(world_->cell_on(k, t) ? 1.0 : -1.0);
}

double Env::episode_objective() const {
  return cum_throughput_bps_ - params_.reward.lambda * cum_uav_energy_j_;
}

void Env::write_trace_jsonl(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (const StepRecord& r : records_) {
    json row;
    row["t"] = r.t;
    row["uav_x"] = r.uav_x;
    row["uav_y"] = r.uav_y;
    row["uav_power_w"] = r.uav_power_w;
    row["uav_disp_m"] = r.uav_disp_norm;
    row["uav_energy_j"] = r.uav_energy_j;
    row["assoc"] = r.assoc;
    row["rewards"] = r.rewards;
    row["coverage_ratio"] = r.coverage_ratio;
    row["needy_users"] = r.needy_count;
    row["gbs_served"] = r.gbs_served_count;
    row["throughput_bps"] = r.throughput_bps;
    out << row.dump() << '\n';
  }
}

}  // namespace uavnes
