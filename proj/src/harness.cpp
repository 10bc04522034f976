#include "uavnes/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace uavnes::harness {

namespace {

using json = nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

constexpr double kAuditTolerance = 1.0 + 1.0e-12;

}  // namespace

void EvalReport::save_json(const std::string& path) const {
  json j;
  j["method"] = method;
  j["world_hash"] = hex64(world_hash);
  j["config_hash"] = hex64(config_hash);
  j["seed"] = seed;
  j["episodes"] = episodes;
  j["coverage_per_episode"] = coverage_per_episode;
  j["reward_per_step"] = reward_per_step;
  j["mean_coverage"] = mean_coverage;
  j["mean_step_reward"] = mean_step_reward;
  j["served_users_pct"] = served_users_pct;
  j["e_uav_wh"] = e_uav_wh;
  j["e_cell_wh"] = e_cell_wh;
  j["e_site_wh"] = e_site_wh;
  j["e_network_wh"] = e_network_wh;
  j["e_total_wh"] = e_total_wh;
  j["episode_objective"] = episode_objective;
  j["audit"] = {{"steps_checked", audit.steps_checked},
                {"violations", audit.violations},
                {"max_disp_ratio", audit.max_disp_ratio},
                {"max_power_ratio", audit.max_power_ratio},
                {"max_fleet_ratio", audit.max_fleet_ratio}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << '\n';
}

EvalReport EvalReport::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const json j = json::parse(in);
  EvalReport r;
  r.method = j.at("method").get<std::string>();
  r.world_hash = std::stoull(j.at("world_hash").get<std::string>(), nullptr, 16);
  r.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  r.seed = j.at("seed").get<std::uint64_t>();
  r.episodes = j.at("episodes").get<int>();
  r.coverage_per_episode = j.at("coverage_per_episode").get<std::vector<double>>();
  r.reward_per_step = j.at("reward_per_step").get<std::vector<double>>();
  r.mean_coverage = j.at("mean_coverage").get<double>();
  r.mean_step_reward = j.at("mean_step_reward").get<double>();
  r.served_users_pct = j.at("served_users_pct").get<double>();
  r.e_uav_wh = j.at("e_uav_wh").get<double>();
  r.e_cell_wh = j.at("e_cell_wh").get<double>();
  r.e_site_wh = j.at("e_site_wh").get<double>();
  r.e_network_wh = j.at("e_network_wh").get<double>();
  r.e_total_wh = j.at("e_total_wh").get<double>();
  r.episode_objective = j.at("episode_objective").get<double>();
  const json& a = j.at("audit");
  r.audit.steps_checked = a.at("steps_checked").get<long>();
  r.audit.violations = a.at("violations").get<long>();
  r.audit.max_disp_ratio = a.at("max_disp_ratio").get<double>();
  r.audit.max_power_ratio = a.at("max_power_ratio").get<double>();
  r.audit.max_fleet_ratio = a.at("max_fleet_ratio").get<double>();
  return r;
}

EvalReport run_eval(const World& world, policies::Policy& policy, const EnvParams& params,
                    int episodes, std::uint64_t seed, const std::string& trace_path,
                    const std::string& ledger_csv_path) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  const ScenarioConfig& cfg = world.config;
  const int t_len = cfg.episode_length;
  const int n = cfg.num_uavs;
  const int m = world.num_users();

  EvalReport report;
  report.method = policy.name();
  report.world_hash = world.hash;
  report.seed = seed;
  report.episodes = episodes;
  report.reward_per_step.assign(static_cast<std::size_t>(t_len), 0.0);

  Env env(world, params);
  double served_user_steps = 0.0;
  const double fleet_cap = cfg.fleet_power_cap();
  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t ep_seed = mix_seed(seed, "eval-episode", static_cast<std::uint64_t>(e));
    env.reset(ep_seed);
    policy.reset(env, ep_seed);
    long needy_user_steps = 0;
    long uav_served_user_steps = 0;
    for (int t = 0; t < t_len; ++t) {
      const StepOutcome out = env.step(policy.act(env));
      double step_reward = 0.0;
      for (double r : out.rewards) step_reward += r;
      report.reward_per_step[static_cast<std::size_t>(t)] += step_reward / n;
      needy_user_steps += out.needy_count;
      uav_served_user_steps += out.uav_served_count;
      served_user_steps += out.uav_served_count + out.gbs_served_count;
    }
    report.coverage_per_episode.push_back(
        needy_user_steps > 0
            ? static_cast<double>(uav_served_user_steps) / static_cast<double>(needy_user_steps)
            : 1.0);
    if (e == 0 && !trace_path.empty()) env.write_trace_jsonl(trace_path);
    if (e == 0 && !ledger_csv_path.empty()) {
      env.ledger().write_csv(ledger_csv_path, params.energy.dt_s);
    }
    const energy::EnergyLedger ledger = env.ledger();
    report.e_uav_wh += ledger.e_uav_wh();
    report.e_cell_wh += ledger.e_cell_wh();
    report.e_site_wh += ledger.e_site_wh();
    report.episode_objective += env.episode_objective();

    for (const StepRecord& rec : env.records()) {
      ++report.audit.steps_checked;
      double fleet = 0.0;
      for (int i = 0; i < n; ++i) {
        const double disp_ratio = rec.uav_disp_norm[static_cast<std::size_t>(i)] / cfg.v_max;
        const double power_ratio = rec.uav_power_w[static_cast<std::size_t>(i)] / cfg.p_max;
        fleet += rec.uav_power_w[static_cast<std::size_t>(i)];
        report.audit.max_disp_ratio = std::max(report.audit.max_disp_ratio, disp_ratio);
        report.audit.max_power_ratio = std::max(report.audit.max_power_ratio, power_ratio);
        if (disp_ratio > kAuditTolerance || power_ratio > kAuditTolerance ||
            rec.uav_power_w[static_cast<std::size_t>(i)] < 0.0) {
          ++report.audit.violations;
        }
      }
      const double fleet_ratio = fleet / fleet_cap;
      report.audit.max_fleet_ratio = std::max(report.audit.max_fleet_ratio, fleet_ratio);
      if (fleet_ratio > kAuditTolerance) ++report.audit.violations;
    }
  }
  for (double& r : report.reward_per_step) r /= episodes;
  report.mean_coverage = mean(report.coverage_per_episode);
  report.mean_step_reward = mean(report.reward_per_step);
  report.served_users_pct =
      100.0 * served_user_steps / (static_cast<double>(episodes) * t_len * m);
  report.e_uav_wh /= episodes;
  report.e_cell_wh /= episodes;
  report.e_site_wh /= episodes;
  report.e_network_wh = report.e_cell_wh + report.e_site_wh;
  report.e_total_wh = report.e_uav_wh + report.e_network_wh;
  report.episode_objective /= episodes;
  return report;
}

EvalReport run_all_on_eval(const World& world, const EnvParams& params) {
  const policies::AllCellsOnResult res = policies::all_cells_on_eval(world, params);
  EvalReport report;
  report.method = "allon";
  report.world_hash = world.hash;  // keyed to the input world for fairness checks
  report.episodes = 1;
  report.served_users_pct = res.served_users_pct;
  report.e_uav_wh = 0.0;
  report.e_cell_wh = res.ledger.e_cell_wh();
  report.e_site_wh = res.ledger.e_site_wh();
  report.e_network_wh = report.e_cell_wh + report.e_site_wh;
  report.e_total_wh = report.e_network_wh;
  report.coverage_per_episode.assign(1, 0.0);
  report.reward_per_step.assign(static_cast<std::size_t>(world.config.episode_length), 0.0);
  return report;
}

namespace {

const EvalReport* find_method(const std::vector<EvalReport>& reports, const std::string& m) {
  for (const EvalReport& r : reports) {
    if (r.method == m) return &r;
  }
  return nullptr;
}

void check_same_world(const std::vector<EvalReport>& reports) {
  for (const EvalReport& r : reports) {
    if (r.world_hash != reports.front().world_hash) {
      throw std::runtime_error("energy table requires identical worlds; got mismatched hashes");
    }
  }
}

double saving_pct(double reference, double value) {
  return (reference - value) / reference * 100.0;
}

}  // namespace

std::string energy_table_text(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("no reports");
  check_same_world(reports);
  const EvalReport* ref = find_method(reports, "maddpg");
  const EvalReport* allon = find_method(reports, "allon");
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-10s %10s %10s %10s %12s %18s %16s\n", "method", "E_uav_Wh",
                "E_cell_Wh", "E_total_Wh", "served_pct", "saving_vs_maddpg%", "saving_vs_allon%");
  os << buf;
  for (const EvalReport& r : reports) {
    std::string vs_ref = "--", vs_allon = "--";
    if (ref && r.method != "maddpg") {
      std::snprintf(buf, sizeof(buf), "%.2f", saving_pct(r.e_total_wh, ref->e_total_wh));
      vs_ref = buf;
    }
    if (allon && r.method != "allon") {
      std::snprintf(buf, sizeof(buf), "%.2f", saving_pct(allon->e_total_wh, r.e_total_wh));
      vs_allon = buf;
    }
    std::snprintf(buf, sizeof(buf), "%-10s %10.2f %10.2f %10.2f %12.2f %18s %16s\n",
                  r.method.c_str(), r.e_uav_wh, r.e_network_wh, r.e_total_wh, r.served_users_pct,
                  vs_ref.c_str(), vs_allon.c_str());
    os << buf;
  }
  return os.str();
}

void write_energy_table_csv(const std::string& path, const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("no reports");
  check_same_world(reports);
  const EvalReport* ref = find_method(reports, "maddpg");
  const EvalReport* allon = find_method(reports, "allon");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "method,e_uav_wh,e_cell_wh,e_total_wh,served_users_pct,saving_vs_maddpg_pct,"
         "saving_vs_allon_pct\n";
  char buf[320];
  for (const EvalReport& r : reports) {
    std::string vs_ref, vs_allon;
    if (ref && r.method != "maddpg") {
      std::snprintf(buf, sizeof(buf), "%.17g", saving_pct(r.e_total_wh, ref->e_total_wh));
      vs_ref = buf;
    }
    if (allon && r.method != "allon") {
      std::snprintf(buf, sizeof(buf), "%.17g", saving_pct(allon->e_total_wh, r.e_total_wh));
      vs_allon = buf;
    }
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%s,%s\n", r.method.c_str(),
                  r.e_uav_wh, r.e_network_wh, r.e_total_wh, r.served_users_pct, vs_ref.c_str(),
                  vs_allon.c_str());
    out << buf;
  }
}

void write_manifest(const std::string& path, const Config& config, std::uint64_t world_hash,
                    const std::string& kind, std::uint64_t seed, int episodes) {
  json j;
  j["code_version"] = kCodeVersion;
  j["kind"] = kind;
  j["config_hash"] = hex64(config_hash(config));
  j["world_hash"] = hex64(world_hash);
  j["seed"] = seed;
  j["episodes"] = episodes;
  j["config"] = config_canonical_text(config);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << '\n';
}

void emit_curves(const std::vector<maddpg::CurvePoint>& curve,
                 const std::vector<EvalReport>& reports, const Config& config,
                 const std::string& out_dir) {
  if (curve.empty()) throw std::invalid_argument("training curve is empty");
  if (reports.empty()) throw std::invalid_argument("no evaluation reports");
  std::filesystem::create_directories(out_dir);
  maddpg::write_curve_csv(out_dir + "/reward_curve.csv", curve);

  const EvalReport& first = reports.front();
  {
    std::ofstream out(out_dir + "/eval_reward_per_step.csv");
    if (!out) throw std::runtime_error("cannot open eval_reward_per_step.csv");
    out << "t";
    for (const EvalReport& r : reports) out << ',' << r.method;
    out << '\n';
    char buf[64];
    for (std::size_t t = 0; t < first.reward_per_step.size(); ++t) {
      out << t;
      for (const EvalReport& r : reports) {
        std::snprintf(buf, sizeof(buf), ",%.17g", r.reward_per_step[t]);
        out << buf;
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(out_dir + "/coverage_per_episode.csv");
    if (!out) throw std::runtime_error("cannot open coverage_per_episode.csv");
    out << "episode";
    for (const EvalReport& r : reports) out << ',' << r.method;
    out << '\n';
    char buf[64];
    for (std::size_t e = 0; e < first.coverage_per_episode.size(); ++e) {
      out << e;
      for (const EvalReport& r : reports) {
        const double v = e < r.coverage_per_episode.size() ? r.coverage_per_episode[e] : 0.0;
        std::snprintf(buf, sizeof(buf), ",%.17g", v);
        out << buf;
      }
      out << '\n';
    }
  }
  write_energy_table_csv(out_dir + "/energy_table.csv", reports);
  write_manifest(out_dir + "/manifest.json", config, first.world_hash, "curves", first.seed,
                 first.episodes);
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

namespace {

double beta_cont_frac(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3.0e-14;
  constexpr double kTiny = 1.0e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cont_frac(a, b, x) / a;
  return 1.0 - bt * beta_cont_frac(b, a, 1.0 - x) / b;
}

PairedTResult paired_t_test_greater(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("paired test needs two equal samples of size >= 2");
  }
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double n = static_cast<double>(diff.size());
  const double md = mean(diff);
  const double sd = std::sqrt(variance(diff));
  PairedTResult res;
  if (sd == 0.0) {
    res.t = md > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    res.p = md > 0.0 ? 0.0 : 1.0;
    return res;
  }
  res.t = md / (sd / std::sqrt(n));
  const double dof = n - 1.0;
  const double tail = 0.5 * incomplete_beta(dof / 2.0, 0.5, dof / (dof + res.t * res.t));
  res.p = res.t >= 0.0 ? tail : 1.0 - tail;
  return res;
}

SlopeFit ols_slope(const std::vector<double>& ys) {
  const std::size_t n = ys.size();
  if (n < 3) throw std::invalid_argument("need at least 3 points for a slope fit");
  const double xbar = (static_cast<double>(n) - 1.0) / 2.0;
  const double ybar = mean(ys);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - xbar;
    sxx += dx * dx;
    sxy += dx * (ys[i] - ybar);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pred = ybar + fit.slope * (static_cast<double>(i) - xbar);
    rss += (ys[i] - pred) * (ys[i] - pred);
  }
  fit.stderr_slope = std::sqrt(rss / (static_cast<double>(n) - 2.0) / sxx);
  return fit;
}

}  // namespace uavnes::harness
