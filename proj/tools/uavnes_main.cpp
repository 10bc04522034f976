#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uavnes/config.hpp"
#include "uavnes/harness.hpp"
#include "uavnes/maddpg.hpp"
#include "uavnes/policies.hpp"
#include "uavnes/world.hpp"

namespace {

using namespace uavnes;

int cmd_train(const std::string& config_path, std::uint64_t seed, bool seed_set,
              const std::string& out_dir) {
  Config config = load_config_file(config_path);
  if (seed_set) override_seed(config, seed);
  std::filesystem::create_directories(out_dir);
  const World world = build_world(config.scenario);
  maddpg::Trainer trainer(world, config.env, config.train);
  std::cout << "training " << config.train.episodes << " episodes ("
            << world.config.num_uavs << " UAVs, " << world.num_cells() << " cells, "
            << world.num_users() << " users)\n";
  const maddpg::TrainResult result = trainer.train(out_dir);
  harness::write_manifest(out_dir + "/manifest.json", config, world.hash, "train",
                          config.scenario.seed, config.train.episodes);
  if (!result.curve.empty()) {
    std::cout << "final mean step reward: " << result.curve.back().mean_step_reward << '\n';
  }
  std::cout << "checkpoint: " << result.checkpoint_dir << '\n';
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& policy_name,
             const std::string& checkpoint, int episodes, std::uint64_t seed, bool seed_set,
             const std::string& out_dir) {
  Config config = load_config_file(config_path);
  std::filesystem::create_directories(out_dir);
  // The world stays pinned by the config seed so different methods (and the
  // training run) compare on identical scenarios; --seed only steers the
  // evaluation episodes.
  const std::uint64_t eval_seed = seed_set ? seed : config.scenario.seed;
  const World world = build_world(config.scenario);
  const policies::PolicyKind kind = policies::parse_policy_kind(policy_name);

  harness::EvalReport report;
  if (kind == policies::PolicyKind::kAllCellsOn) {
    report = harness::run_all_on_eval(world, config.env);
    report.seed = eval_seed;
  } else {
    std::unique_ptr<policies::Policy> policy =
        policies::make_policy(kind, checkpoint, eval_seed);
    report = harness::run_eval(world, *policy, config.env, episodes, eval_seed,
                               out_dir + "/trace_episode0.jsonl",
                               out_dir + "/energy_ledger_episode0.csv");
  }
  report.config_hash = config_hash(config);
  report.save_json(out_dir + "/eval_report.json");
  {
    std::ofstream out(out_dir + "/coverage_per_episode.csv");
    out << "episode,coverage\n";
    char buf[64];
    for (std::size_t e = 0; e < report.coverage_per_episode.size(); ++e) {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e, report.coverage_per_episode[e]);
      out << buf;
    }
  }
  {
    std::ofstream out(out_dir + "/eval_reward_per_step.csv");
    out << "t,mean_reward\n";
    char buf[64];
    for (std::size_t t = 0; t < report.reward_per_step.size(); ++t) {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", t, report.reward_per_step[t]);
      out << buf;
    }
  }
  harness::write_manifest(out_dir + "/manifest.json", config, world.hash, "eval:" + policy_name,
                          config.scenario.seed, report.episodes);
  std::cout << "method " << report.method << ": mean coverage " << report.mean_coverage
            << ", served users " << report.served_users_pct << "%, E_total " << report.e_total_wh
            << " Wh\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<harness::EvalReport> reports;
  for (const std::string& dir : inputs) {
    reports.push_back(harness::EvalReport::load_json(dir + "/eval_report.json"));
  }
  const std::string table = harness::energy_table_text(reports);
  harness::write_energy_table_csv(out_dir + "/energy_table.csv", reports);
  std::ofstream txt(out_dir + "/energy_table.txt");
  txt << table;
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV-assisted coverage simulator for sleeping-cell networks"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", policy_name = "knn", checkpoint;
  std::uint64_t seed = 0;
  int episodes = 15;
  std::vector<std::string> inputs;

  CLI::App* train = app.add_subcommand("train", "train the MADDPG agents");
  train->add_option("--config", config_path, "scenario config file")->required();
  CLI::Option* train_seed = train->add_option("--seed", seed, "seed override");
  train->add_option("--out", out_dir, "output directory")->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate a policy");
  eval->add_option("--config", config_path, "scenario config file")->required();
  eval->add_option("--policy", policy_name, "maddpg|random|knn|allon")->required();
  eval->add_option("--checkpoint", checkpoint, "checkpoint dir (maddpg policy)");
  eval->add_option("--episodes", episodes, "evaluation episodes");
  CLI::Option* eval_seed = eval->add_option("--seed", seed, "seed override");
  eval->add_option("--out", out_dir, "output directory")->required();

  CLI::App* report = app.add_subcommand("report", "merge per-method eval reports");
  report->add_option("--inputs", inputs, "eval output directories")->required()->expected(-1);
  report->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train)) {
      return cmd_train(config_path, seed, train_seed->count() > 0, out_dir);
    }
    if (app.got_subcommand(eval)) {
      return cmd_eval(config_path, policy_name, checkpoint, episodes, seed,
                      eval_seed->count() > 0, out_dir);
    }
    if (app.got_subcommand(report)) {
      return cmd_report(inputs, out_dir);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
