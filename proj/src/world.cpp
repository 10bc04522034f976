#include "uavnes/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "uavnes/rng.hpp"

namespace uavnes {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

/// Tri-hex site anchors form a triangular lattice with pitch 3R. Cells sit
/// at distance R from their anchor at angles 0/120/240 degrees, which makes
/// the three hexagons mutually adjacent and keeps the union a proper tiling.
std::vector<Vec2> site_anchors(int num_sites, double r) {
  const Vec2 g1{3.0 * r, 0.0};
  const Vec2 g2{1.5 * r, 1.5 * kSqrt3 * r};
  std::vector<Vec2> candidates;
  const int range = 2 + static_cast<int>(std::ceil(std::sqrt(static_cast<double>(num_sites))));
  for (int a = -range; a <= range; ++a) {
    for (int b = -range; b <= range; ++b) {
      candidates.push_back(g1 * static_cast<double>(a) + g2 * static_cast<double>(b));
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Vec2& p, const Vec2& q) {
    const double np = p.norm_sq(), nq = q.norm_sq();
    if (np != nq) return np < nq;
    const double ap = std::atan2(p.y, p.x), aq = std::atan2(q.y, q.x);
    if (ap != aq) return ap < aq;
    return p.x < q.x;
  });
  candidates.resize(static_cast<std::size_t>(num_sites));
  return candidates;
}

std::uint64_t fnv1a_bytes(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
std::uint64_t fnv1a_value(std::uint64_t h, const T& v) {
  return fnv1a_bytes(h, &v, sizeof(v));
}

std::uint64_t world_digest(const World& w) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a_value(h, w.config.seed);
  h = fnv1a_value(h, w.config.area_half_width);
  h = fnv1a_value(h, w.config.episode_length);
  for (const Cell& c : w.cells) {
    h = fnv1a_value(h, c.center.x);
    h = fnv1a_value(h, c.center.y);
    h = fnv1a_value(h, c.site_id);
  }
  for (const User& u : w.users) {
    h = fnv1a_value(h, u.position.x);
    h = fnv1a_value(h, u.position.y);
    h = fnv1a_value(h, u.home_cell);
    h = fnv1a_value(h, u.base_rate);
  }
  h = fnv1a_bytes(h, w.schedule.data(), w.schedule.size());
  h = fnv1a_bytes(h, w.demand.data(), w.demand.size() * sizeof(double));
  return h;
}

std::vector<std::uint8_t> random_fraction_schedule(const ScenarioConfig& cfg, int num_cells,
                                                   RngStream& rng) {
  const int t_len = cfg.episode_length;
  const int off_count =
      static_cast<int>(std::floor(cfg.sleep_fraction * static_cast<double>(num_cells)));
  std::vector<std::uint8_t> schedule(static_cast<std::size_t>(num_cells) * t_len, 1);

  auto pick_off_set = [&rng, num_cells, off_count]() {
    std::vector<int> ids(static_cast<std::size_t>(num_cells));
    for (int k = 0; k < num_cells; ++k) ids[static_cast<std::size_t>(k)] = k;
    for (int k = 0; k < off_count; ++k) {
      const auto j = k + static_cast<int>(rng.uniform_index(
                             static_cast<std::uint64_t>(num_cells - k)));
      std::swap(ids[static_cast<std::size_t>(k)], ids[static_cast<std::size_t>(j)]);
    }
    ids.resize(static_cast<std::size_t>(off_count));
    return ids;
  };

  const std::vector<int> first = pick_off_set();
  const bool has_switch = cfg.sleep_switch_step > 0 && cfg.sleep_switch_step < t_len;
  const std::vector<int> second = has_switch ? pick_off_set() : first;
  for (int t = 0; t < t_len; ++t) {
    const std::vector<int>& off = (has_switch && t >= cfg.sleep_switch_step) ? second : first;
    for (int k : off) schedule[static_cast<std::size_t>(k) * t_len + t] = 0;
  }
  return schedule;
}

}  // namespace

void ScenarioConfig::validate() const {
  require(num_sites >= 1 && num_uavs >= 1 && num_users >= 1, "counts must be >= 1");
  require(area_half_width > 0.0, "area_half_width must be > 0");
  require(cell_radius > 0.0, "cell_radius must be > 0");
  require(uav_altitude > 0.0, "uav_altitude must be > 0");
  require(v_max > 0.0, "v_max must be > 0");
  require(p_max > 0.0, "p_max must be > 0");
  require(episode_length >= 1, "episode_length must be >= 1");
  require(dt > 0.0, "dt must be > 0");
  require(sleep_fraction >= 0.0 && sleep_fraction <= 1.0, "sleep_fraction must be in [0,1]");
  require(traffic.base_rate_mean > 0.0 && traffic.base_rate_spread >= 0.0 &&
              traffic.base_rate_mean > traffic.base_rate_spread,
          "base rate range must stay positive");
  require(traffic.surge_multiplier >= 1.0, "surge_multiplier must be >= 1");
  require(traffic.surge_on_prob >= 0.0 && traffic.surge_on_prob <= 1.0 &&
              traffic.surge_off_prob >= 0.0 && traffic.surge_off_prob <= 1.0,
          "surge probabilities must be in [0,1]");
  require(traffic.profile_mix_streaming >= 0.0 && traffic.profile_mix_conferencing >= 0.0 &&
              traffic.profile_mix_streaming + traffic.profile_mix_conferencing > 0.0,
          "profile mix weights must be nonnegative and not all zero");
  if (schedule_mode == ScheduleMode::kFile) {
    require(!schedule_file.empty(), "schedule_mode=file requires schedule_file");
  }
}

bool World::cell_on(int k, int t) const {
  if (k < 0 || k >= num_cells() || t < 0 || t >= config.episode_length) {
    throw std::out_of_range("cell_on: index out of range");
  }
  return schedule[static_cast<std::size_t>(k) * config.episode_length + t] != 0;
}

std::vector<int> World::inactive_cells(int t) const {
  if (t < 0 || t >= config.episode_length) {
    throw std::out_of_range("inactive_cells: step out of range");
  }
  std::vector<int> off;
  for (int k = 0; k < num_cells(); ++k) {
    if (!cell_on(k, t)) off.push_back(k);
  }
  return off;
}

double World::demand_at(int j, int t) const {
  if (j < 0 || j >= num_users() || t < 0 || t >= config.episode_length) {
    throw std::out_of_range("demand_at: index out of range");
  }
  return demand[static_cast<std::size_t>(j) * config.episode_length + t];
}

std::vector<int> World::needy_users(int t) const {
  std::vector<int> ids;
  for (const User& u : users) {
    if (!cell_on(u.home_cell, t)) ids.push_back(u.id);
  }
  return ids;
}

World World::with_all_on_schedule() const {
  World copy = *this;
  std::fill(copy.schedule.begin(), copy.schedule.end(), std::uint8_t{1});
  copy.hash = world_digest(copy);
  return copy;
}

std::vector<std::uint8_t> load_schedule_file(const std::string& path, int num_cells,
                                             int episode_length) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schedule file: " + path);
  std::vector<std::uint8_t> schedule;
  schedule.reserve(static_cast<std::size_t>(num_cells) * episode_length);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    int cols = 0;
    while (std::getline(ls, tok, ',')) {
      const int v = std::stoi(tok);
      if (v != 0 && v != 1) throw std::runtime_error("schedule entries must be 0 or 1");
      schedule.push_back(static_cast<std::uint8_t>(v));
      ++cols;
    }
    if (cols != episode_length) {
      throw std::runtime_error("schedule row length " + std::to_string(cols) +
                               " does not match episode_length " +
                               std::to_string(episode_length));
    }
    ++rows;
  }
  if (rows != num_cells) {
    throw std::runtime_error("schedule has " + std::to_string(rows) + " rows, expected " +
                             std::to_string(num_cells));
  }
  return schedule;
}

World build_world(const ScenarioConfig& config) {
  config.validate();
  World w;
  w.config = config;

  const double r = config.cell_radius;
  const std::vector<Vec2> anchors = site_anchors(config.num_sites, r);
  for (int s = 0; s < config.num_sites; ++s) {
    Site site;
    site.id = s;
    site.anchor = anchors[static_cast<std::size_t>(s)];
    for (int c = 0; c < 3; ++c) {
      const double angle = 2.0 * M_PI * c / 3.0;
      Cell cell;
      cell.id = s * 3 + c;
      cell.site_id = s;
      cell.center = site.anchor + Vec2{r * std::cos(angle), r * std::sin(angle)};
      cell.radius = r;
      site.cells[static_cast<std::size_t>(c)] = cell.id;
      w.cells.push_back(cell);
    }
    w.sites.push_back(site);
  }

  for (const Cell& c : w.cells) {
    const bool fits = std::abs(c.center.x) + r <= config.area_half_width &&
                      std::abs(c.center.y) + kSqrt3 * 0.5 * r <= config.area_half_width;
    if (!fits) {
      throw std::invalid_argument("cells cannot fit inside the area; increase area_half_width");
    }
  }

  RngStream rng(mix_seed(config.seed, "world"));

  // Sleep schedule.
  if (config.schedule_mode == ScheduleMode::kFile) {
    w.schedule = load_schedule_file(config.schedule_file, w.num_cells(), config.episode_length);
  } else {
    w.schedule = random_fraction_schedule(config, w.num_cells(), rng);
  }

  // Users: uniform over the union of cells via rejection sampling against the
  // nearest cell's hexagon.
  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (const Cell& c : w.cells) {
    min_x = std::min(min_x, c.center.x - r);
    max_x = std::max(max_x, c.center.x + r);
    min_y = std::min(min_y, c.center.y - kSqrt3 * 0.5 * r);
    max_y = std::max(max_y, c.center.y + kSqrt3 * 0.5 * r);
  }
  auto nearest_cell = [&w](const Vec2& p) {
    int best = 0;
    double best_d = (p - w.cells[0].center).norm_sq();
    for (int k = 1; k < w.num_cells(); ++k) {
      const double d = (p - w.cells[static_cast<std::size_t>(k)].center).norm_sq();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  for (int j = 0; j < config.num_users; ++j) {
    User u;
    u.id = j;
    for (;;) {
      const Vec2 p{rng.uniform(min_x, max_x), rng.uniform(min_y, max_y)};
      const int k = nearest_cell(p);
      if (point_in_hex(p, w.cells[static_cast<std::size_t>(k)].center, r)) {
        u.position = p;
        u.home_cell = k;
        break;
      }
    }
    w.users.push_back(u);
  }

  // Traffic: per-user log-uniform base rate plus a two-state surge chain
  // starting OFF. Conferencing-like users see shorter, more frequent bursts.
  const TrafficConfig& tc = config.traffic;
  const double mix_total = tc.profile_mix_streaming + tc.profile_mix_conferencing;
  const double lo = std::log(tc.base_rate_mean - tc.base_rate_spread);
  const double hi = std::log(tc.base_rate_mean + tc.base_rate_spread);
  w.demand.assign(static_cast<std::size_t>(config.num_users) * config.episode_length, 0.0);
  for (int j = 0; j < config.num_users; ++j) {
    User& u = w.users[static_cast<std::size_t>(j)];
    u.profile = rng.uniform() * mix_total < tc.profile_mix_streaming
                    ? TrafficProfile::kStreamingLike
                    : TrafficProfile::kConferencingLike;
    u.base_rate = std::exp(rng.uniform(lo, hi));
    const bool conf = u.profile == TrafficProfile::kConferencingLike;
    const double on_p = conf ? std::min(1.0, 2.0 * tc.surge_on_prob) : tc.surge_on_prob;
    const double off_p = conf ? std::min(1.0, 2.0 * tc.surge_off_prob) : tc.surge_off_prob;
    bool surging = false;
    for (int t = 0; t < config.episode_length; ++t) {
      if (t > 0) {
        const double roll = rng.uniform();
        surging = surging ? roll >= off_p : roll < on_p;
      }
      const double rate = u.base_rate * (surging ? tc.surge_multiplier : 1.0);
      w.demand[static_cast<std::size_t>(j) * config.episode_length + t] = rate;
      w.max_demand = std::max(w.max_demand, rate);
    }
  }

  w.hash = world_digest(w);
  return w;
}

}  // namespace uavnes
