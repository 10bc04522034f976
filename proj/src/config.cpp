#include "uavnes/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace uavnes {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double parse_double(const std::string& v, const std::string& key) {
  if (lower(v) == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad number '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const std::int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad integer '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const std::uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad unsigned '" + v + "'");
  }
}

using Setter = std::function<void(Config&, const std::string& value, const std::string& key)>;

std::map<std::string, Setter> build_setters() {
  std::map<std::string, Setter> s;
  // Scenario
  s["area_half_width"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.area_half_width = parse_double(v, k); };
  s["num_sites"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.num_sites = static_cast<int>(parse_int(v, k)); };
  s["cell_radius"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.cell_radius = parse_double(v, k); };
  s["num_uavs"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.num_uavs = static_cast<int>(parse_int(v, k)); };
  s["num_users"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.num_users = static_cast<int>(parse_int(v, k)); };
  s["uav_altitude"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.uav_altitude = parse_double(v, k); };
  s["v_max"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.v_max = parse_double(v, k); };
  s["p_max"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.p_max = parse_double(v, k); };
  s["fleet_p_max"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.fleet_p_max = parse_double(v, k); };
  s["episode_length"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.episode_length = static_cast<int>(parse_int(v, k)); };
  s["dt"] = [](Config& c, const std::string& v, const std::string& k) {
    c.scenario.dt = parse_double(v, k);
    c.env.energy.dt_s = c.scenario.dt;
  };
  s["schedule_mode"] = [](Config& c, const std::string& v, const std::string& k) {
    const std::string m = lower(trim(v));
    if (m == "file") c.scenario.schedule_mode = ScheduleMode::kFile;
    else if (m == "random_fraction") c.scenario.schedule_mode = ScheduleMode::kRandomFraction;
    else throw std::invalid_argument("config key '" + k + "': expected file|random_fraction");
  };
  s["schedule_file"] = [](Config& c, const std::string& v, const std::string&) { c.scenario.schedule_file = trim(v); };
  s["sleep_fraction"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.sleep_fraction = parse_double(v, k); };
  s["sleep_switch_step"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.sleep_switch_step = static_cast<int>(parse_int(v, k)); };
  s["seed"] = [](Config& c, const std::string& v, const std::string& k) { override_seed(c, parse_u64(v, k)); };
  // Traffic
  s["traffic.base_rate_mean"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.traffic.base_rate_mean = parse_double(v, k); };
  s["traffic.base_rate_spread"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.traffic.base_rate_spread = parse_double(v, k); };
  s["traffic.surge_multiplier"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.traffic.surge_multiplier = parse_double(v, k); };
  s["traffic.surge_on_prob"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.traffic.surge_on_prob = parse_double(v, k); };
  s["traffic.surge_off_prob"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.traffic.surge_off_prob = parse_double(v, k); };
  s["traffic.profile_mix_streaming"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.traffic.profile_mix_streaming = parse_double(v, k); };
  s["traffic.profile_mix_conferencing"] = [](Config& c, const std::string& v, const std::string& k) { c.scenario.traffic.profile_mix_conferencing = parse_double(v, k); };
  // Channel
  s["channel.ref_gain"] = [](Config& c, const std::string& v, const std::string& k) { c.env.channel.ref_gain = parse_double(v, k); };
  s["channel.path_loss_exp"] = [](Config& c, const std::string& v, const std::string& k) { c.env.channel.path_loss_exp = parse_double(v, k); };
  s["channel.rician_g"] = [](Config& c, const std::string& v, const std::string& k) { c.env.channel.rician_g = parse_double(v, k); };
  s["channel.bandwidth_hz"] = [](Config& c, const std::string& v, const std::string& k) { c.env.channel.bandwidth_hz = parse_double(v, k); };
  s["channel.noise_power_w"] = [](Config& c, const std::string& v, const std::string& k) { c.env.channel.noise_power_w = parse_double(v, k); };
  s["channel.gbs_tx_power_w"] = [](Config& c, const std::string& v, const std::string& k) { c.env.channel.gbs_tx_power_w = parse_double(v, k); };
  s["channel.gbs_height_m"] = [](Config& c, const std::string& v, const std::string& k) { c.env.channel.gbs_height_m = parse_double(v, k); };
  // Energy
  s["energy.prop_quad"] = [](Config& c, const std::string& v, const std::string& k) { c.env.energy.prop_quad = parse_double(v, k); };
  s["energy.prop_lin"] = [](Config& c, const std::string& v, const std::string& k) { c.env.energy.prop_lin = parse_double(v, k); };
  s["energy.cell_static_w"] = [](Config& c, const std::string& v, const std::string& k) { c.env.energy.cell_static_w = parse_double(v, k); };
  s["energy.cell_load_slope_w"] = [](Config& c, const std::string& v, const std::string& k) { c.env.energy.cell_load_slope_w = parse_double(v, k); };
  s["energy.site_static_w"] = [](Config& c, const std::string& v, const std::string& k) { c.env.energy.site_static_w = parse_double(v, k); };
  s["energy.cell_capacity_bps"] = [](Config& c, const std::string& v, const std::string& k) { c.env.energy.cell_capacity_bps = parse_double(v, k); };
  // Reward
  s["reward.omega1"] = [](Config& c, const std::string& v, const std::string& k) { c.env.reward.omega1 = parse_double(v, k); };
  s["reward.omega2"] = [](Config& c, const std::string& v, const std::string& k) { c.env.reward.omega2 = parse_double(v, k); };
  s["reward.gamma"] = [](Config& c, const std::string& v, const std::string& k) {
    c.env.reward.gamma = parse_double(v, k);
    c.train.gamma = c.env.reward.gamma;
  };
  s["reward.lambda"] = [](Config& c, const std::string& v, const std::string& k) { c.env.reward.lambda = parse_double(v, k); };
  // Env extras
  s["env.spawn_points"] = [](Config& c, const std::string& v, const std::string& k) {
    c.env.spawn_points.clear();
    std::istringstream points(v);
    std::string pair;
    while (std::getline(points, pair, ';')) {
      const std::size_t colon = pair.find(':');
      if (colon == std::string::npos) {
        throw std::invalid_argument("config key '" + k + "': expected x:y pairs separated by ;");
      }
      c.env.spawn_points.push_back({parse_double(trim(pair.substr(0, colon)), k),
                                    parse_double(trim(pair.substr(colon + 1)), k)});
    }
  };
  s["env.obs_radius_factor"] = [](Config& c, const std::string& v, const std::string& k) { c.env.obs_radius_factor = parse_double(v, k); };
  s["env.obs_user_slots"] = [](Config& c, const std::string& v, const std::string& k) { c.env.obs_user_slots = static_cast<int>(parse_int(v, k)); };
  // Train
  s["train.episodes"] = [](Config& c, const std::string& v, const std::string& k) { c.train.episodes = static_cast<int>(parse_int(v, k)); };
  s["train.actor_lr"] = [](Config& c, const std::string& v, const std::string& k) { c.train.actor_lr = parse_double(v, k); };
  s["train.critic_lr"] = [](Config& c, const std::string& v, const std::string& k) { c.train.critic_lr = parse_double(v, k); };
  s["train.tau"] = [](Config& c, const std::string& v, const std::string& k) { c.train.tau = parse_double(v, k); };
  s["train.batch_size"] = [](Config& c, const std::string& v, const std::string& k) { c.train.batch_size = static_cast<int>(parse_int(v, k)); };
  s["train.warmup_steps"] = [](Config& c, const std::string& v, const std::string& k) { c.train.warmup_steps = static_cast<int>(parse_int(v, k)); };
  s["train.update_interval"] = [](Config& c, const std::string& v, const std::string& k) { c.train.update_interval = static_cast<int>(parse_int(v, k)); };
  s["train.grad_clip"] = [](Config& c, const std::string& v, const std::string& k) { c.train.grad_clip = parse_double(v, k); };
  s["train.hidden1"] = [](Config& c, const std::string& v, const std::string& k) { c.train.hidden1 = static_cast<int>(parse_int(v, k)); };
  s["train.hidden2"] = [](Config& c, const std::string& v, const std::string& k) { c.train.hidden2 = static_cast<int>(parse_int(v, k)); };
  s["train.replay_capacity"] = [](Config& c, const std::string& v, const std::string& k) { c.train.replay_capacity = static_cast<std::size_t>(parse_int(v, k)); };
  s["train.per_alpha"] = [](Config& c, const std::string& v, const std::string& k) { c.train.per_alpha = parse_double(v, k); };
  s["train.per_beta0"] = [](Config& c, const std::string& v, const std::string& k) { c.train.per_beta0 = parse_double(v, k); };
  s["train.per_beta1"] = [](Config& c, const std::string& v, const std::string& k) { c.train.per_beta1 = parse_double(v, k); };
  s["train.per_eps"] = [](Config& c, const std::string& v, const std::string& k) { c.train.per_eps = parse_double(v, k); };
  s["train.ou_theta"] = [](Config& c, const std::string& v, const std::string& k) { c.train.ou.theta = parse_double(v, k); };
  s["train.ou_mu"] = [](Config& c, const std::string& v, const std::string& k) { c.train.ou.mu = parse_double(v, k); };
  s["train.ou_sigma0"] = [](Config& c, const std::string& v, const std::string& k) { c.train.ou.sigma0 = parse_double(v, k); };
  s["train.ou_decay"] = [](Config& c, const std::string& v, const std::string& k) { c.train.ou.decay = parse_double(v, k); };
  s["train.ou_sigma_floor"] = [](Config& c, const std::string& v, const std::string& k) { c.train.ou.sigma_floor = parse_double(v, k); };
  s["train.exploration_off_episode"] = [](Config& c, const std::string& v, const std::string& k) { c.train.exploration_off_episode = static_cast<int>(parse_int(v, k)); };
  s["train.lr_decay_episode"] = [](Config& c, const std::string& v, const std::string& k) { c.train.lr_decay_episode = static_cast<int>(parse_int(v, k)); };
  s["train.lr_decay_factor"] = [](Config& c, const std::string& v, const std::string& k) { c.train.lr_decay_factor = parse_double(v, k); };
  s["train.checkpoint_interval"] = [](Config& c, const std::string& v, const std::string& k) { c.train.checkpoint_interval = static_cast<int>(parse_int(v, k)); };
  return s;
}

}  // namespace

Config default_config() {
  Config c;
  c.train.seed = c.scenario.seed;
  c.train.gamma = c.env.reward.gamma;
  return c;
}

void override_seed(Config& config, std::uint64_t seed) {
  config.scenario.seed = seed;
  config.train.seed = seed;
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  static const std::map<std::string, Setter> setters = build_setters();
  Config config = default_config();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    it->second(config, value, key);
  }
  // Schedule paths are resolved relative to the config file.
  if (!config.scenario.schedule_file.empty()) {
    std::filesystem::path sp(config.scenario.schedule_file);
    if (sp.is_relative()) {
      config.scenario.schedule_file =
          (std::filesystem::path(path).parent_path() / sp).string();
    }
  }
  return config;
}

std::string config_canonical_text(const Config& c) {
  std::ostringstream os;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "area_half_width=" << num(c.scenario.area_half_width) << '\n'
     << "cell_radius=" << num(c.scenario.cell_radius) << '\n'
     << "channel.bandwidth_hz=" << num(c.env.channel.bandwidth_hz) << '\n'
     << "channel.gbs_height_m=" << num(c.env.channel.gbs_height_m) << '\n'
     << "channel.gbs_tx_power_w=" << num(c.env.channel.gbs_tx_power_w) << '\n'
     << "channel.noise_power_w=" << num(c.env.channel.noise_power_w) << '\n'
     << "channel.path_loss_exp=" << num(c.env.channel.path_loss_exp) << '\n'
     << "channel.ref_gain=" << num(c.env.channel.ref_gain) << '\n'
     << "channel.rician_g=" << num(c.env.channel.rician_g) << '\n'
     << "dt=" << num(c.scenario.dt) << '\n'
     << "energy.cell_capacity_bps=" << num(c.env.energy.cell_capacity_bps) << '\n'
     << "energy.cell_load_slope_w=" << num(c.env.energy.cell_load_slope_w) << '\n'
     << "energy.cell_static_w=" << num(c.env.energy.cell_static_w) << '\n'
     << "energy.prop_lin=" << num(c.env.energy.prop_lin) << '\n'
     << "energy.prop_quad=" << num(c.env.energy.prop_quad) << '\n'
     << "energy.site_static_w=" << num(c.env.energy.site_static_w) << '\n'
     << "env.obs_radius_factor=" << num(c.env.obs_radius_factor) << '\n'
     << "env.obs_user_slots=" << c.env.obs_user_slots << '\n';
  os << "env.spawn_points=";
  for (std::size_t i = 0; i < c.env.spawn_points.size(); ++i) {
    if (i) os << ';';
    os << num(c.env.spawn_points[i].x) << ':' << num(c.env.spawn_points[i].y);
  }
  os << '\n'
     << "episode_length=" << c.scenario.episode_length << '\n'
     << "fleet_p_max=" << num(c.scenario.fleet_p_max) << '\n'
     << "num_sites=" << c.scenario.num_sites << '\n'
     << "num_uavs=" << c.scenario.num_uavs << '\n'
     << "num_users=" << c.scenario.num_users << '\n'
     << "p_max=" << num(c.scenario.p_max) << '\n'
     << "reward.gamma=" << num(c.env.reward.gamma) << '\n'
     << "reward.lambda=" << num(c.env.reward.lambda) << '\n'
     << "reward.omega1=" << num(c.env.reward.omega1) << '\n'
     << "reward.omega2=" << num(c.env.reward.omega2) << '\n'
     << "schedule_file=" << c.scenario.schedule_file << '\n'
     << "schedule_mode="
     << (c.scenario.schedule_mode == ScheduleMode::kFile ? "file" : "random_fraction") << '\n'
     << "seed=" << c.scenario.seed << '\n'
     << "sleep_fraction=" << num(c.scenario.sleep_fraction) << '\n'
     << "sleep_switch_step=" << c.scenario.sleep_switch_step << '\n'
     << "traffic.base_rate_mean=" << num(c.scenario.traffic.base_rate_mean) << '\n'
     << "traffic.base_rate_spread=" << num(c.scenario.traffic.base_rate_spread) << '\n'
     << "traffic.profile_mix_conferencing=" << num(c.scenario.traffic.profile_mix_conferencing) << '\n'
     << "traffic.profile_mix_streaming=" << num(c.scenario.traffic.profile_mix_streaming) << '\n'
     << "traffic.surge_multiplier=" << num(c.scenario.traffic.surge_multiplier) << '\n'
     << "traffic.surge_off_prob=" << num(c.scenario.traffic.surge_off_prob) << '\n'
     << "traffic.surge_on_prob=" << num(c.scenario.traffic.surge_on_prob) << '\n'
     << "train.actor_lr=" << num(c.train.actor_lr) << '\n'
     << "train.batch_size=" << c.train.batch_size << '\n'
     << "train.checkpoint_interval=" << c.train.checkpoint_interval << '\n'
     << "train.critic_lr=" << num(c.train.critic_lr) << '\n'
     << "train.episodes=" << c.train.episodes << '\n'
     << "train.exploration_off_episode=" << c.train.exploration_off_episode << '\n'
     << "train.grad_clip=" << num(c.train.grad_clip) << '\n'
     << "train.hidden1=" << c.train.hidden1 << '\n'
     << "train.hidden2=" << c.train.hidden2 << '\n'
     << "train.lr_decay_episode=" << c.train.lr_decay_episode << '\n'
     << "train.lr_decay_factor=" << num(c.train.lr_decay_factor) << '\n'
     << "train.ou_decay=" << num(c.train.ou.decay) << '\n'
     << "train.ou_mu=" << num(c.train.ou.mu) << '\n'
     << "train.ou_sigma0=" << num(c.train.ou.sigma0) << '\n'
     << "train.ou_sigma_floor=" << num(c.train.ou.sigma_floor) << '\n'
     << "train.ou_theta=" << num(c.train.ou.theta) << '\n'
     << "train.per_alpha=" << num(c.train.per_alpha) << '\n'
     << "train.per_beta0=" << num(c.train.per_beta0) << '\n'
     << "train.per_beta1=" << num(c.train.per_beta1) << '\n'
     << "train.per_eps=" << num(c.train.per_eps) << '\n'
     << "train.replay_capacity=" << c.train.replay_capacity << '\n'
     << "train.update_interval=" << c.train.update_interval << '\n'
     << "train.warmup_steps=" << c.train.warmup_steps << '\n'
     << "uav_altitude=" << num(c.scenario.uav_altitude) << '\n'
     << "v_max=" << num(c.scenario.v_max) << '\n';
  return os.str();
}

std::uint64_t config_hash(const Config& config) {
  const std::string text = config_canonical_text(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace uavnes
