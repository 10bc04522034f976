// Acceptance suite: prints one pass/fail line per criterion and exits
// nonzero if any criterion fails. Heavy criteria (training) run last so the
// fast numeric gates report first.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "uavnes/channel.hpp"
#include "uavnes/config.hpp"
#include "uavnes/energy.hpp"
#include "uavnes/harness.hpp"
#include "uavnes/maddpg.hpp"
#include "uavnes/nn.hpp"
#include "uavnes/policies.hpp"
#include "uavnes/replay.hpp"
#include "uavnes/world.hpp"

using namespace uavnes;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// Desk-scale scenario pinned for the learning criteria. Mirrors
// configs/desk.cfg; the schedule (cells 2 and 6 OFF) is written from code so
// the binary is self-contained.

Config desk_config(const std::string& schedule_path) {
  Config c = default_config();
  c.scenario.area_half_width = 600.0;
  c.scenario.num_sites = 3;
  c.scenario.cell_radius = 120.0;
  c.scenario.num_uavs = 2;
  c.scenario.num_users = 30;
  c.scenario.uav_altitude = 100.0;
  c.scenario.v_max = 30.0;
  c.scenario.p_max = 2.0;
  c.scenario.episode_length = 100;
  c.scenario.dt = 1.0;
  c.scenario.schedule_mode = ScheduleMode::kFile;
  c.scenario.schedule_file = schedule_path;
  override_seed(c, 1);

  c.scenario.traffic.base_rate_mean = 1.75e6;
  c.scenario.traffic.base_rate_spread = 1.25e6;
  c.scenario.traffic.surge_multiplier = 2.0;
  c.scenario.traffic.surge_on_prob = 0.01;
  c.scenario.traffic.surge_off_prob = 0.25;

  c.env.channel.ref_gain = 1.0e-3;
  c.env.channel.path_loss_exp = 3.3;
  c.env.channel.rician_g = 12.0;
  c.env.channel.bandwidth_hz = 1.0e6;
  c.env.channel.noise_power_w = 3.0e-12;
  c.env.channel.gbs_tx_power_w = 0.05;
  c.env.channel.gbs_height_m = 25.0;

  c.env.energy.prop_quad = 0.002;
  c.env.energy.prop_lin = 0.05;
  c.env.energy.dt_s = 1.0;
  c.env.energy.cell_static_w = 100.0;
  c.env.energy.cell_load_slope_w = 40.0;
  c.env.energy.site_static_w = 50.0;
  c.env.energy.cell_capacity_bps = 1.0e7;

  c.env.reward.omega1 = 0.8;
  c.env.reward.omega2 = 0.2;
  c.env.reward.gamma = 0.95;
  c.env.reward.lambda = 1.0e-3;
  c.env.obs_radius_factor = 3.5;
  c.env.obs_user_slots = 6;

  c.train.episodes = 3000;
  c.train.actor_lr = 3.0e-4;
  c.train.critic_lr = 1.0e-3;
  c.train.gamma = 0.95;
  c.train.tau = 0.01;
  c.train.batch_size = 128;
  c.train.warmup_steps = 2000;
  c.train.update_interval = 4;
  c.train.grad_clip = 1.0;
  c.train.hidden1 = 64;
  c.train.hidden2 = 64;
  c.train.replay_capacity = std::size_t{1} << 17;
  c.train.per_alpha = 0.6;
  c.train.per_beta0 = 0.4;
  c.train.per_beta1 = 1.0;
  c.train.per_eps = 1.0e-6;
  c.train.ou.theta = 0.15;
  c.train.ou.sigma0 = 0.3;
  c.train.ou.decay = 0.99995;
  c.train.ou.sigma_floor = 0.02;
  c.train.checkpoint_interval = 0;
  return c;
}

void write_desk_schedule(const std::string& path) {
  std::ofstream out(path);
  for (int k = 0; k < 9; ++k) {
    const bool off = k == 2 || k == 6;
    for (int t = 0; t < 100; ++t) out << (off ? '0' : '1') << (t + 1 < 100 ? "," : "");
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

void criterion_1_gradients() {
  const double t_start = now_seconds();
  RngStream rng(101);
  const double h = 1.0e-6;
  double max_rel = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int depth = 1 + static_cast<int>(rng.uniform_index(3));  // up to 3 hidden
    std::vector<int> sizes{2 + static_cast<int>(rng.uniform_index(15))};
    for (int d = 0; d < depth; ++d) sizes.push_back(1 + static_cast<int>(rng.uniform_index(64)));
    sizes.push_back(1 + static_cast<int>(rng.uniform_index(4)));
    nn::MlpSpec spec{sizes, trial % 2 ? nn::OutputActivation::kSquash
                                      : nn::OutputActivation::kNone};
    nn::MlpParams params = nn::init_mlp(spec, rng);
    std::vector<double> input(static_cast<std::size_t>(sizes.front()));
    for (double& v : input) v = rng.uniform(-1.0, 1.0);
    std::vector<double> dir(static_cast<std::size_t>(sizes.back()));
    for (double& v : dir) v = rng.uniform(-1.0, 1.0);

    nn::ForwardCache cache;
    nn::forward(params, input, &cache);
    const nn::Gradients grads = nn::backward(params, cache, dir);

    auto loss = [&]() {
      const std::vector<double> y = nn::forward(params, input);
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * dir[i];
      return s;
    };
    auto probe = [&](std::vector<double>& theta, const std::vector<double>& g) {
      const std::size_t stride = 1 + theta.size() / 20;  // sampled coordinates
      for (std::size_t i = 0; i < theta.size(); i += stride) {
        const double keep = theta[i];
        theta[i] = keep + h;
        const double up = loss();
        theta[i] = keep - h;
        const double down = loss();
        theta[i] = keep;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(g[i]), 1.0e-6});
        max_rel = std::max(max_rel, std::abs(fd - g[i]) / denom);
      }
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      probe(params.weights[l], grads.weights[l]);
      probe(params.biases[l], grads.biases[l]);
    }
  }
  const double elapsed = now_seconds() - t_start;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "MLP gradients vs central differences: max rel err %.3g (< 1e-4), %.1f s (< 60)",
                max_rel, elapsed);
  report(1, max_rel < 1.0e-4 && elapsed < 60.0, buf);
}

void criterion_2_per() {
  replay::PrioritizedReplay buffer(4, 1.0, 1.0e-9, 202);
  for (int i = 0; i < 4; ++i) {
    replay::Transition t;
    t.obs = {static_cast<double>(i)};
    t.rewards = {0.0};
    buffer.push(std::move(t));
  }
  buffer.update_priorities({0, 1, 2, 3}, {1.0, 2.0, 3.0, 4.0});
  long counts[4] = {0, 0, 0, 0};
  const int draws = 100000;
  for (int d = 0; d < draws / 4; ++d) {
    const replay::SampleBatch b = buffer.sample(4, 1.0);
    for (std::size_t idx : b.indices) counts[idx]++;
  }
  double max_dev = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double freq = static_cast<double>(counts[i]) / draws;
    max_dev = std::max(max_dev, std::abs(freq - 0.1 * (i + 1)));
  }

  RngStream rng(203);
  replay::PrioritizedReplay big(std::size_t{1} << 8, 0.6, 1.0e-6, 204);
  for (int op = 0; op < 100000; ++op) {
    if (big.size() == 0 || rng.uniform() < 0.4) {
      replay::Transition t;
      t.obs = {static_cast<double>(op)};
      t.rewards = {0.0};
      big.push(std::move(t));
    } else {
      big.update_priorities({rng.uniform_index(big.size())}, {rng.uniform(0.0, 5.0)});
    }
  }
  const std::vector<double>& nodes = big.tree().raw_nodes();
  std::vector<double> rebuilt = nodes;
  for (std::size_t i = big.tree().capacity() - 1; i >= 1; --i) {
    rebuilt[i] = rebuilt[2 * i] + rebuilt[2 * i + 1];
  }
  double tree_err = 0.0;
  for (std::size_t i = 1; i < big.tree().capacity(); ++i) {
    tree_err = std::max(tree_err, std::abs(rebuilt[i] - nodes[i]));
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "PER sampling dev %.4f (< 0.01); tree invariant err %.2e after 1e5 ops (< 1e-9)",
                max_dev, tree_err);
  report(2, max_dev < 0.01 && tree_err <= 1.0e-9, buf);
}

void criterion_3_channel() {
  RngStream rng(303);
  channel::ChannelParams params;
  params.ref_gain = 1.0e-3;
  params.bandwidth_hz = 1.0e6;
  params.noise_power_w = 1.0e-12;
  double max_rel = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(3));
    const int m = 1 + static_cast<int>(rng.uniform_index(5));
    const int cells = static_cast<int>(rng.uniform_index(5));
    params.gbs_tx_power_w = rng.uniform(0.0, 1.0);
    std::vector<double> powers(static_cast<std::size_t>(n));
    for (double& p : powers) p = rng.uniform(0.0, 2.0);
    std::vector<double> gains(static_cast<std::size_t>(n + cells) * m);
    for (double& g : gains) g = rng.uniform(1.0e-12, 1.0e-6);
    std::vector<double> req(static_cast<std::size_t>(m), 1.0e6);
    std::vector<std::uint8_t> home(static_cast<std::size_t>(m), 0);
    const channel::SinrReport r =
        channel::compute_sinr(powers, cells, gains, req, home, params);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        // Scalar re-evaluation of the SINR and rate formulas.
        double denom = params.noise_power_w;
        for (int k = 0; k < n; ++k) {
          if (k != i) denom += powers[static_cast<std::size_t>(k)] * gains[static_cast<std::size_t>(k) * m + j];
        }
        for (int ci = 0; ci < cells; ++ci) {
          denom += params.gbs_tx_power_w * gains[static_cast<std::size_t>(n + ci) * m + j];
        }
        const double gamma = powers[static_cast<std::size_t>(i)] * gains[static_cast<std::size_t>(i) * m + j] / denom;
        const double rate = params.bandwidth_hz * std::log2(1.0 + gamma);
        const double g_err = std::abs(r.sinr_at(i, j) - gamma) / std::max(gamma, 1e-300);
        const double r_err = std::abs(r.rate_at(i, j) - rate) / std::max(rate, 1e-300);
        max_rel = std::max({max_rel, g_err, r_err});
      }
    }
  }

  params.rician_g = 7.0;
  params.ref_gain = 1.0;
  params.path_loss_exp = 2.0;
  RngStream fade_rng(304);
  double acc = 0.0;
  const int samples = 1000000;
  for (int s = 0; s < samples; ++s) acc += channel::sample_channel_gain(1.0, params, fade_rng);
  const double mean_gain = acc / samples;

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "SINR/rate oracle max rel err %.2e (< 1e-9); E[|h|^2] = %.4f (1 +- 0.01)",
                max_rel, mean_gain);
  report(3, max_rel < 1.0e-9 && std::abs(mean_gain - 1.0) < 0.01, buf);
}

void criterion_4_energy() {
  energy::EnergyParams params;
  params.prop_quad = 0.0;
  params.prop_lin = 0.0;
  params.dt_s = 1.0;
  params.cell_static_w = 100.0;
  params.cell_load_slope_w = 40.0;
  params.site_static_w = 50.0;
  params.cell_capacity_bps = 1.0e7;
  energy::EpisodeTrace trace;
  trace.num_uavs = 0;
  trace.num_cells = 1;
  trace.num_sites = 1;
  trace.cell_site = {0};
  for (int t = 0; t < 3600; ++t) trace.append_step({}, {}, {1}, {0.0});
  const energy::EnergyLedger ledger = energy::episode_ledger(trace, params);
  const double closed_form_err = std::abs(ledger.e_total_wh() - 150.0);

  RngStream rng(404);
  energy::EpisodeTrace rnd;
  rnd.num_uavs = 2;
  rnd.num_cells = 6;
  rnd.num_sites = 2;
  rnd.cell_site = {0, 0, 0, 1, 1, 1};
  for (int t = 0; t < 200; ++t) {
    std::vector<double> disp{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
    std::vector<double> power{rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0)};
    std::vector<std::uint8_t> state;
    std::vector<double> load;
    for (int k = 0; k < 6; ++k) {
      state.push_back(rng.uniform() < 0.5 ? 1 : 0);
      load.push_back(rng.uniform());
    }
    rnd.append_step(disp, power, state, load);
  }
  const energy::EnergyLedger l2 = energy::episode_ledger(rnd, params);
  double cell_sum = 0.0, site_sum = 0.0;
  for (double e : l2.cell_j) cell_sum += e;
  for (double e : l2.site_j) site_sum += e;
  const bool identity = l2.e_total_wh() == energy::EnergyLedger::to_wh(cell_sum + site_sum);

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "E_total identity exact: %s; 1-cell hour = %.9f Wh (err %.2e < 1e-9)",
                identity ? "yes" : "no", ledger.e_total_wh(), closed_form_err);
  report(4, identity && closed_form_err < 1.0e-9, buf);
}

void criterion_5_determinism(const std::string& tmp_dir) {
  Config config = desk_config(tmp_dir + "/schedule.csv");
  config.train.episodes = 40;  // covers warmup and > 500 gradient updates
  config.train.checkpoint_interval = 0;
  const World world = build_world(config.scenario);

  std::string curves[2];
  for (int run = 0; run < 2; ++run) {
    maddpg::Trainer trainer(world, config.env, config.train);
    const maddpg::TrainResult res = trainer.train("");
    std::ostringstream os;
    char buf[128];
    for (const maddpg::CurvePoint& p : res.curve) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", p.episode, p.mean_step_reward,
                    p.sigma, p.actor_lr);
      os << buf;
    }
    curves[run] = os.str();
  }
  const bool trains_match = curves[0] == curves[1] && !curves[0].empty();

  policies::KnnFixedPolicy knn_a, knn_b;
  const harness::EvalReport ra = harness::run_eval(world, knn_a, config.env, 5, 777);
  const harness::EvalReport rb = harness::run_eval(world, knn_b, config.env, 5, 777);
  ra.save_json(tmp_dir + "/det_a.json");
  rb.save_json(tmp_dir + "/det_b.json");
  const bool evals_match = slurp(tmp_dir + "/det_a.json") == slurp(tmp_dir + "/det_b.json");

  report(5, trains_match && evals_match,
         std::string("bit-identical training curves: ") + (trains_match ? "yes" : "no") +
             "; bit-identical eval reports: " + (evals_match ? "yes" : "no"));
}

struct LearnedArtifacts {
  std::string checkpoint_dir;
  std::vector<maddpg::CurvePoint> curve;
  double train_seconds = 0.0;
};

LearnedArtifacts criterion_6_learning(const Config& config, const World& world,
                                      const std::string& tmp_dir) {
  LearnedArtifacts art;
  const double t0 = now_seconds();
  maddpg::Trainer trainer(world, config.env, config.train);
  const maddpg::TrainResult res = trainer.train(tmp_dir + "/train");
  art.train_seconds = now_seconds() - t0;
  art.checkpoint_dir = res.checkpoint_dir;
  art.curve = res.curve;

  std::vector<double> rewards;
  for (const maddpg::CurvePoint& p : res.curve) rewards.push_back(p.mean_step_reward);
  const int n = static_cast<int>(rewards.size());
  const std::vector<double> head(rewards.begin(), rewards.begin() + 100);
  const std::vector<double> tail(rewards.end() - 100, rewards.end());
  const double first100 = harness::mean(head);
  const double last100 = harness::mean(tail);

  const std::vector<double> quartile(rewards.begin() + 3 * n / 4, rewards.end());
  const harness::SlopeFit fit = harness::ols_slope(quartile);
  // "Slope >= 0 within noise": not significantly negative at ~2 standard errors.
  const bool no_collapse = fit.slope >= -2.0 * fit.stderr_slope;

  char buf[240];
  std::snprintf(buf, sizeof(buf),
                "first-100 mean %.4f -> last-100 mean %.4f (must rise); last-quartile slope "
                "%.2e (SE %.2e, >= -2 SE); train %.0f s (< 3600)",
                first100, last100, fit.slope, fit.stderr_slope, art.train_seconds);
  report(6, last100 > first100 && no_collapse && art.train_seconds < 3600.0, buf);
  return art;
}

void criteria_7_8_9(const Config& config, const World& world, const LearnedArtifacts& art) {
  const std::uint64_t eval_seed = 424242;
  const int episodes = 15;

  policies::CheckpointPolicy maddpg_policy =
      policies::CheckpointPolicy::from_dir(art.checkpoint_dir);
  policies::KnnFixedPolicy knn_policy;
  policies::RandomPolicy random_policy;

  const harness::EvalReport r_maddpg =
      harness::run_eval(world, maddpg_policy, config.env, episodes, eval_seed);
  const harness::EvalReport r_knn =
      harness::run_eval(world, knn_policy, config.env, episodes, eval_seed);
  const harness::EvalReport r_random =
      harness::run_eval(world, random_policy, config.env, episodes, eval_seed);
  const harness::EvalReport r_allon = harness::run_all_on_eval(world, config.env);

  // Criterion 7: coverage ordering with paired one-sided significance.
  const harness::PairedTResult mk =
      harness::paired_t_test_greater(r_maddpg.coverage_per_episode, r_knn.coverage_per_episode);
  const harness::PairedTResult kr =
      harness::paired_t_test_greater(r_knn.coverage_per_episode, r_random.coverage_per_episode);
  {
    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "coverage maddpg %.3f > knn %.3f (p=%.2e) > random %.3f (p=%.2e), both p<0.05",
                  r_maddpg.mean_coverage, r_knn.mean_coverage, mk.p, r_random.mean_coverage,
                  kr.p);
    report(7,
           r_maddpg.mean_coverage > r_knn.mean_coverage &&
               r_knn.mean_coverage > r_random.mean_coverage && mk.p < 0.05 && kr.p < 0.05,
           buf);
  }

  // Criterion 8: energy ordering and service parity.
  {
    const bool uav_energy_ok = r_maddpg.e_uav_wh <= 0.6 * r_knn.e_uav_wh;
    const bool total_energy_ok = r_maddpg.e_total_wh <= 0.9 * r_allon.e_total_wh;
    const bool service_ok = r_maddpg.served_users_pct >= r_allon.served_users_pct - 5.0;
    char buf[280];
    std::snprintf(buf, sizeof(buf),
                  "E_uav %.4f <= 0.6*%.4f Wh: %s; E_total %.2f <= 0.9*%.2f Wh: %s; served "
                  "%.2f%% within 5pp of %.2f%%: %s",
                  r_maddpg.e_uav_wh, r_knn.e_uav_wh, uav_energy_ok ? "yes" : "no",
                  r_maddpg.e_total_wh, r_allon.e_total_wh, total_energy_ok ? "yes" : "no",
                  r_maddpg.served_users_pct, r_allon.served_users_pct, service_ok ? "yes" : "no");
    report(8, uav_energy_ok && total_energy_ok && service_ok, buf);
  }

  // Criterion 9: constraint compliance across every evaluation trace.
  {
    long violations = 0, steps = 0;
    double worst = 0.0;
    for (const harness::EvalReport* r : {&r_maddpg, &r_knn, &r_random}) {
      violations += r->audit.violations;
      steps += r->audit.steps_checked;
      worst = std::max({worst, r->audit.max_disp_ratio, r->audit.max_power_ratio,
                        r->audit.max_fleet_ratio});
    }
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "trace audit: %ld violations over %ld steps; worst bound ratio %.12f (<= 1+1e-12)",
                  violations, steps, worst);
    report(9, violations == 0 && steps == 3L * episodes * config.scenario.episode_length, buf);
  }
}

}  // namespace

int main() {
  const std::string tmp_dir =
      (std::filesystem::temp_directory_path() / "uavnes_acceptance").string();
  std::filesystem::remove_all(tmp_dir);
  std::filesystem::create_directories(tmp_dir);
  const std::string schedule_path = tmp_dir + "/schedule.csv";
  write_desk_schedule(schedule_path);

  try {
    criterion_1_gradients();
    criterion_2_per();
    criterion_3_channel();
    criterion_4_energy();
    criterion_5_determinism(tmp_dir);

    const Config config = desk_config(schedule_path);
    const World world = build_world(config.scenario);
    const LearnedArtifacts art = criterion_6_learning(config, world, tmp_dir);
    criteria_7_8_9(config, world, art);
  } catch (const std::exception& ex) {
    std::printf("[FAIL] acceptance aborted: %s\n", ex.what());
    ++g_failures;
  }

  std::filesystem::remove_all(tmp_dir);
  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria failed\n", g_failures);
  return 1;
}
