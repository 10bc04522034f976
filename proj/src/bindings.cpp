#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uavnes/channel.hpp"
#include "uavnes/config.hpp"
#include "uavnes/energy.hpp"
#include "uavnes/env.hpp"
#include "uavnes/harness.hpp"
#include "uavnes/maddpg.hpp"
#include "uavnes/nn.hpp"
#include "uavnes/policies.hpp"
#include "uavnes/replay.hpp"
#include "uavnes/world.hpp"

namespace py = pybind11;
using namespace uavnes;

namespace {

py::dict outcome_to_dict(const StepOutcome& out) {
  py::dict d;
  d["rewards"] = out.rewards;
  d["done"] = out.done;
  d["coverage_ratio"] = out.coverage_ratio;
  d["needy_count"] = out.needy_count;
  d["uav_served_count"] = out.uav_served_count;
  d["gbs_served_count"] = out.gbs_served_count;
  d["uav_energy_j"] = out.uav_energy_j;
  d["e_max_j"] = out.e_max_j;
  d["throughput_bps"] = out.throughput_bps;
  d["assoc"] = out.report.assoc;
  d["served_mask"] = out.report.served_mask;
  return d;
}

py::dict report_to_dict(const harness::EvalReport& r) {
  py::dict d;
  d["method"] = r.method;
  d["episodes"] = r.episodes;
  d["coverage_per_episode"] = r.coverage_per_episode;
  d["mean_coverage"] = r.mean_coverage;
  d["mean_step_reward"] = r.mean_step_reward;
  d["served_users_pct"] = r.served_users_pct;
  d["e_uav_wh"] = r.e_uav_wh;
  d["e_cell_wh"] = r.e_cell_wh;
  d["e_site_wh"] = r.e_site_wh;
  d["e_network_wh"] = r.e_network_wh;
  d["e_total_wh"] = r.e_total_wh;
  d["constraint_violations"] = r.audit.violations;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "UAV-assisted coverage simulator for sleeping-cell networks";

  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t>())
      .def("uniform", py::overload_cast<>(&RngStream::uniform))
      .def("normal", &RngStream::normal);

  py::class_<TrafficConfig>(m, "TrafficConfig")
      .def(py::init<>())
      .def_readwrite("base_rate_mean", &TrafficConfig::base_rate_mean)
      .def_readwrite("base_rate_spread", &TrafficConfig::base_rate_spread)
      .def_readwrite("surge_multiplier", &TrafficConfig::surge_multiplier)
      .def_readwrite("surge_on_prob", &TrafficConfig::surge_on_prob)
      .def_readwrite("surge_off_prob", &TrafficConfig::surge_off_prob);

  py::enum_<ScheduleMode>(m, "ScheduleMode")
      .value("FILE", ScheduleMode::kFile)
      .value("RANDOM_FRACTION", ScheduleMode::kRandomFraction);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("area_half_width", &ScenarioConfig::area_half_width)
      .def_readwrite("num_sites", &ScenarioConfig::num_sites)
      .def_readwrite("cell_radius", &ScenarioConfig::cell_radius)
      .def_readwrite("num_uavs", &ScenarioConfig::num_uavs)
      .def_readwrite("num_users", &ScenarioConfig::num_users)
      .def_readwrite("uav_altitude", &ScenarioConfig::uav_altitude)
      .def_readwrite("v_max", &ScenarioConfig::v_max)
      .def_readwrite("p_max", &ScenarioConfig::p_max)
      .def_readwrite("episode_length", &ScenarioConfig::episode_length)
      .def_readwrite("dt", &ScenarioConfig::dt)
      .def_readwrite("traffic", &ScenarioConfig::traffic)
      .def_readwrite("schedule_mode", &ScenarioConfig::schedule_mode)
      .def_readwrite("schedule_file", &ScenarioConfig::schedule_file)
      .def_readwrite("sleep_fraction", &ScenarioConfig::sleep_fraction)
      .def_readwrite("seed", &ScenarioConfig::seed);

  py::class_<World>(m, "World")
      .def_property_readonly("num_cells", &World::num_cells)
      .def_property_readonly("num_users", &World::num_users)
      .def_property_readonly("num_sites", &World::num_sites)
      .def_readonly("hash", &World::hash)
      .def_readonly("max_demand", &World::max_demand)
      .def("cell_on", &World::cell_on)
      .def("inactive_cells", &World::inactive_cells)
      .def("demand_at", &World::demand_at)
      .def("needy_users", &World::needy_users)
      .def("with_all_on_schedule", &World::with_all_on_schedule)
      .def("user_position",
           [](const World& w, int j) {
             const Vec2 p = w.users.at(static_cast<std::size_t>(j)).position;
             return py::make_tuple(p.x, p.y);
           })
      .def("cell_center", [](const World& w, int k) {
        const Vec2 p = w.cells.at(static_cast<std::size_t>(k)).center;
        return py::make_tuple(p.x, p.y);
      });

  m.def("build_world", &build_world);

  py::class_<channel::ChannelParams>(m, "ChannelParams")
      .def(py::init<>())
      .def_readwrite("ref_gain", &channel::ChannelParams::ref_gain)
      .def_readwrite("path_loss_exp", &channel::ChannelParams::path_loss_exp)
      .def_readwrite("rician_g", &channel::ChannelParams::rician_g)
      .def_readwrite("bandwidth_hz", &channel::ChannelParams::bandwidth_hz)
      .def_readwrite("noise_power_w", &channel::ChannelParams::noise_power_w)
      .def_readwrite("gbs_tx_power_w", &channel::ChannelParams::gbs_tx_power_w)
      .def_readwrite("gbs_height_m", &channel::ChannelParams::gbs_height_m);

  m.def("link_distance", [](double ux, double uy, double h, double px, double py_) {
    return channel::link_distance({ux, uy}, h, {px, py_});
  });
  m.def("sample_channel_gain", &channel::sample_channel_gain);
  m.def(
      "compute_sinr",
      [](const std::vector<double>& powers, int active_cells, const std::vector<double>& gains,
         const std::vector<double>& req, const std::vector<int>& home_active,
         const channel::ChannelParams& params) {
        std::vector<std::uint8_t> mask(home_active.begin(), home_active.end());
        const channel::SinrReport r =
            channel::compute_sinr(powers, active_cells, gains, req, mask, params);
        py::dict d;
        d["sinr"] = r.sinr;
        d["rates"] = r.rates;
        d["assoc"] = r.assoc;
        d["served_mask"] = r.served_mask;
        d["throughput_bps"] = channel::total_throughput(r);
        return d;
      });

  py::class_<energy::EnergyParams>(m, "EnergyParams")
      .def(py::init<>())
      .def_readwrite("prop_quad", &energy::EnergyParams::prop_quad)
      .def_readwrite("prop_lin", &energy::EnergyParams::prop_lin)
      .def_readwrite("dt_s", &energy::EnergyParams::dt_s)
      .def_readwrite("cell_static_w", &energy::EnergyParams::cell_static_w)
      .def_readwrite("cell_load_slope_w", &energy::EnergyParams::cell_load_slope_w)
      .def_readwrite("site_static_w", &energy::EnergyParams::site_static_w)
      .def_readwrite("cell_capacity_bps", &energy::EnergyParams::cell_capacity_bps);

  m.def("uav_step_energy", [](double dx, double dy, double power, const energy::EnergyParams& p) {
    return energy::uav_step_energy({dx, dy}, power, p);
  });
  m.def("cell_step_power", &energy::cell_step_power);

  py::class_<RewardWeights>(m, "RewardWeights")
      .def(py::init<>())
      .def_readwrite("omega1", &RewardWeights::omega1)
      .def_readwrite("omega2", &RewardWeights::omega2)
      .def_readwrite("gamma", &RewardWeights::gamma)
      .def_readwrite("lambda_", &RewardWeights::lambda);

  py::class_<EnvParams>(m, "EnvParams")
      .def(py::init<>())
      .def_readwrite("channel", &EnvParams::channel)
      .def_readwrite("energy", &EnvParams::energy)
      .def_readwrite("reward", &EnvParams::reward)
      .def_readwrite("obs_radius_factor", &EnvParams::obs_radius_factor)
      .def_readwrite("obs_user_slots", &EnvParams::obs_user_slots);

  py::class_<Env>(m, "Env")
      .def(py::init<const World&, const EnvParams&>(), py::keep_alive<1, 2>())
      .def("reset", &Env::reset)
      .def("step",
           [](Env& env, const std::vector<RawAction>& raw) {
             return outcome_to_dict(env.step(raw));
           })
      .def("observations", &Env::observations)
      .def("global_state", &Env::global_state)
      .def_property_readonly("obs_dim", &Env::obs_dim)
      .def_property_readonly("global_dim", &Env::global_dim)
      .def_property_readonly("num_agents", &Env::num_agents)
      .def_property_readonly("time", &Env::time)
      .def_property_readonly("done", &Env::done)
      .def_property_readonly("e_max_j", &Env::e_max_j)
      .def("episode_objective", &Env::episode_objective)
      .def("write_trace_jsonl", &Env::write_trace_jsonl);

  py::class_<Config>(m, "Config")
      .def(py::init(&default_config))
      .def_readwrite("scenario", &Config::scenario)
      .def_readwrite("env", &Config::env);

  m.def("load_config_file", &load_config_file);
  m.def("config_hash", &config_hash);

  // Minimal dense-network surface for smoke tests.
  py::class_<nn::MlpParams>(m, "MlpParams");
  m.def("mlp_init", [](const std::vector<int>& sizes, bool squash, std::uint64_t seed) {
    nn::MlpSpec spec{sizes, squash ? nn::OutputActivation::kSquash : nn::OutputActivation::kNone};
    RngStream rng(seed);
    return nn::init_mlp(spec, rng);
  });
  m.def("mlp_forward", [](const nn::MlpParams& p, const std::vector<double>& x) {
    return nn::forward(p, x);
  });

  py::class_<replay::SumTree>(m, "SumTree")
      .def(py::init<std::size_t>())
      .def("set", &replay::SumTree::set)
      .def("leaf", &replay::SumTree::leaf)
      .def("total", &replay::SumTree::total)
      .def("find_prefix", &replay::SumTree::find_prefix);

  m.def(
      "train",
      [](const Config& config, const std::string& out_dir) {
        const World world = build_world(config.scenario);
        maddpg::Trainer trainer(world, config.env, config.train);
        const maddpg::TrainResult result = trainer.train(out_dir);
        std::vector<double> rewards;
        for (const maddpg::CurvePoint& p : result.curve) rewards.push_back(p.mean_step_reward);
        py::dict d;
        d["curve"] = rewards;
        d["checkpoint_dir"] = result.checkpoint_dir;
        return d;
      },
      py::arg("config"), py::arg("out_dir") = std::string());

  m.def("run_eval", [](const Config& config, const std::string& policy_name,
                       const std::string& checkpoint, int episodes, std::uint64_t seed) {
    const World world = build_world(config.scenario);
    const policies::PolicyKind kind = policies::parse_policy_kind(policy_name);
    if (kind == policies::PolicyKind::kAllCellsOn) {
      return report_to_dict(harness::run_all_on_eval(world, config.env));
    }
    std::unique_ptr<policies::Policy> policy = policies::make_policy(kind, checkpoint, seed);
    return report_to_dict(harness::run_eval(world, *policy, config.env, episodes, seed));
  });
}
