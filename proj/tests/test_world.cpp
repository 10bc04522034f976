#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "uavnes/world.hpp"

using namespace uavnes;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig cfg;
  cfg.num_sites = 3;
  cfg.num_users = 20;
  cfg.episode_length = 40;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("config invariants rejected") {
  ScenarioConfig cfg = small_config();
  cfg.num_users = 0;
  CHECK_THROWS_AS(build_world(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.sleep_fraction = 1.5;
  CHECK_THROWS_AS(build_world(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.area_half_width = 50.0;  // cells cannot fit
  CHECK_THROWS_AS(build_world(cfg), std::invalid_argument);
}

TEST_CASE("same config and seed give bit-identical worlds") {
  const World a = build_world(small_config());
  const World b = build_world(small_config());
  CHECK(a.hash == b.hash);
  CHECK(a.demand == b.demand);
  CHECK(a.schedule == b.schedule);
  for (int j = 0; j < a.num_users(); ++j) {
    CHECK(a.users[j].position.x == b.users[j].position.x);
    CHECK(a.users[j].position.y == b.users[j].position.y);
  }
  ScenarioConfig other = small_config();
  other.seed = 8;
  CHECK(build_world(other).hash != a.hash);
}

TEST_CASE("world geometry: 3 cells per site, users inside cells, nearest home cell") {
  const World w = build_world(small_config());
  CHECK(w.num_cells() == 9);
  CHECK(w.num_sites() == 3);
  for (const Site& s : w.sites) {
    for (int c : s.cells) CHECK(w.cells[c].site_id == s.id);
  }
  // Cells of one site are mutually adjacent (centers sqrt(3)*R apart).
  const double r = w.config.cell_radius;
  for (const Site& s : w.sites) {
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b) {
        const double d = distance(w.cells[s.cells[a]].center, w.cells[s.cells[b]].center);
        CHECK(d == doctest::Approx(std::sqrt(3.0) * r).epsilon(1e-12));
      }
    }
  }
  for (const User& u : w.users) {
    CHECK(point_in_hex(u.position, w.cells[u.home_cell].center, r));
    double best = 1e300;
    int best_k = -1;
    for (int k = 0; k < w.num_cells(); ++k) {
      const double d = distance(u.position, w.cells[k].center);
      if (d < best) {
        best = d;
        best_k = k;
      }
    }
    CHECK(u.home_cell == best_k);
  }
}

TEST_CASE("random_fraction schedule turns off floor(K/3) cells at every step") {
  ScenarioConfig cfg = small_config();
  cfg.sleep_fraction = 1.0 / 3.0;
  const World w = build_world(cfg);
  for (int t = 0; t < cfg.episode_length; ++t) {
    CHECK(static_cast<int>(w.inactive_cells(t).size()) == 3);
  }
  // Schedule consistency: inactive and active cells partition all cells.
  for (int t = 0; t < cfg.episode_length; ++t) {
    std::set<int> off_set;
    for (int k : w.inactive_cells(t)) off_set.insert(k);
    for (int k = 0; k < w.num_cells(); ++k) {
      CHECK(w.cell_on(k, t) == (off_set.count(k) == 0));
    }
  }
}

TEST_CASE("mid-episode switch changes the OFF set at the configured step") {
  ScenarioConfig cfg = small_config();
  cfg.sleep_fraction = 1.0 / 3.0;
  cfg.sleep_switch_step = 20;
  const World w = build_world(cfg);
  CHECK(w.inactive_cells(0) == w.inactive_cells(19));
  CHECK(w.inactive_cells(20) == w.inactive_cells(39));
  CHECK(static_cast<int>(w.inactive_cells(25).size()) == 3);
}

TEST_CASE("inactive_cells edge cases") {
  ScenarioConfig cfg = small_config();
  cfg.sleep_fraction = 0.0;
  const World all_on = build_world(cfg);
  CHECK(all_on.inactive_cells(0).empty());
  cfg.sleep_fraction = 1.0;
  const World all_off = build_world(cfg);
  CHECK(static_cast<int>(all_off.inactive_cells(5).size()) == all_off.num_cells());
  CHECK_THROWS_AS(all_on.inactive_cells(-1), std::out_of_range);
  CHECK_THROWS_AS(all_on.inactive_cells(cfg.episode_length), std::out_of_range);
}

TEST_CASE("schedule file round trip and validation") {
  ScenarioConfig cfg = small_config();
  cfg.num_sites = 1;
  cfg.episode_length = 4;
  const std::string path = "test_schedule.csv";
  {
    std::ofstream out(path);
    out << "1,1,1,1\n1,1,1,1\n0,0,0,0\n";  // cell 2 always off
  }
  cfg.schedule_mode = ScheduleMode::kFile;
  cfg.schedule_file = path;
  const World w = build_world(cfg);
  CHECK(w.inactive_cells(2) == std::vector<int>{2});

  {
    std::ofstream out(path);
    out << "1,1,1\n1,1,1\n0,0,0\n";  // wrong row length
  }
  CHECK_THROWS(build_world(cfg));
  {
    std::ofstream out(path);
    out << "1,1,1,1\n1,1,1,1\n";  // wrong row count
  }
  CHECK_THROWS(build_world(cfg));
}

TEST_CASE("demand process follows the surge chain") {
  ScenarioConfig cfg = small_config();

  SUBCASE("multiplier 1 keeps demand constant") {
    cfg.traffic.surge_multiplier = 1.0;
    const World w = build_world(cfg);
    for (int j = 0; j < w.num_users(); ++j) {
      for (int t = 1; t < cfg.episode_length; ++t) {
        CHECK(w.demand_at(j, t) == w.demand_at(j, 0));
      }
    }
  }

  SUBCASE("zero on-probability means no surges") {
    cfg.traffic.surge_on_prob = 0.0;
    cfg.traffic.surge_multiplier = 4.0;
    const World w = build_world(cfg);
    for (int j = 0; j < w.num_users(); ++j) {
      for (int t = 0; t < cfg.episode_length; ++t) {
        CHECK(w.demand_at(j, t) == doctest::Approx(w.users[j].base_rate).epsilon(1e-15));
      }
    }
  }

  SUBCASE("sticky chain surges from t=1 onward") {
    cfg.traffic.surge_on_prob = 1.0;
    cfg.traffic.surge_off_prob = 0.0;
    cfg.traffic.surge_multiplier = 3.0;
    const World w = build_world(cfg);
    for (int j = 0; j < w.num_users(); ++j) {
      CHECK(w.demand_at(j, 0) == doctest::Approx(w.users[j].base_rate).epsilon(1e-15));
      for (int t = 1; t < cfg.episode_length; ++t) {
        CHECK(w.demand_at(j, t) == doctest::Approx(3.0 * w.users[j].base_rate).epsilon(1e-15));
      }
    }
  }

  SUBCASE("demand strictly positive and within the multiplier envelope") {
    const World w = build_world(cfg);
    for (int j = 0; j < w.num_users(); ++j) {
      for (int t = 0; t < cfg.episode_length; ++t) {
        CHECK(w.demand_at(j, t) > 0.0);
        CHECK(w.demand_at(j, t) <= w.max_demand);
      }
    }
  }
}

TEST_CASE("needy users are exactly those with OFF home cells") {
  ScenarioConfig cfg = small_config();
  cfg.sleep_fraction = 1.0 / 3.0;
  const World w = build_world(cfg);
  for (int t = 0; t < cfg.episode_length; t += 7) {
    const std::vector<int> needy = w.needy_users(t);
    std::set<int> needy_set(needy.begin(), needy.end());
    for (const User& u : w.users) {
      CHECK(needy_set.count(u.id) == (w.cell_on(u.home_cell, t) ? 0u : 1u));
    }
  }
}

TEST_CASE("all-on override keeps geometry but clears the schedule") {
  ScenarioConfig cfg = small_config();
  cfg.sleep_fraction = 1.0 / 3.0;
  const World w = build_world(cfg);
  const World on = w.with_all_on_schedule();
  CHECK(on.inactive_cells(0).empty());
  CHECK(on.hash != w.hash);
  CHECK(on.users[3].position.x == w.users[3].position.x);
  CHECK(on.demand == w.demand);
}
