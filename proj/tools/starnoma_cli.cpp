// Experiment harness CLI: run training/evaluation campaigns, compare result
// tables, and inspect scenarios.

#include <CLI11.hpp>
#include <iostream>

#include "starnoma/harness.hpp"

using namespace starnoma;

int main(int argc, char** argv) {
  CLI::App app{"STAR-RIS NOMA network simulator and optimizer"};
  app.require_subcommand(1);

  ExperimentSpec spec;
  std::string seeds_arg = "1";
  std::string sweep_arg;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;

  CLI::App* run = app.add_subcommand("run", "run one experiment campaign");
  run->add_option("--scenario", spec.scenario_path, "scenario config file")
      ->required();
  run->add_option("--algo", spec.algo, "camappo|mappo|ppo|ca")->required();
  run->add_option("--seeds", seeds_arg, "comma-separated seed list");
  run->add_option("--power-sweep", sweep_arg,
                  "comma-separated P_max values (watts)");
  run->add_option("--out", spec.out_dir, "output directory");
  run->add_option("--budget", spec.budget, "training steps per run");
  run->add_option("--eval-episodes", spec.eval_episodes,
                  "evaluation episodes per run");
  run->add_flag("--force", spec.force, "overwrite existing outputs");
  run->add_flag("--dump-channels", spec.dump_channels,
                "write raw channel tensors per run");
  CLI::Option* seed_opt =
      run->add_option("--seed", seed_flag, "override the scenario seed");

  std::vector<std::string> summaries;
  std::string compare_out = "comparison.csv";
  CLI::App* cmp = app.add_subcommand("compare", "merge summary tables");
  cmp->add_option("summaries", summaries, "summary.csv paths")
      ->required()
      ->expected(-2);
  cmp->add_option("--out", compare_out, "output comparison csv");

  std::string dump_scenario_path;
  std::uint64_t dump_seed = 0;
  bool dump_seed_set = false;
  CLI::App* dump = app.add_subcommand("dump-scenario",
                                      "print the resolved world geometry");
  dump->add_option("--scenario", dump_scenario_path, "scenario config file")
      ->required();
  CLI::Option* dump_seed_opt =
      dump->add_option("--seed", dump_seed, "override the scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) {
      seed_set = seed_opt->count() > 0;
      if (seed_set) spec.seed_override = seed_flag;
      spec.seeds.clear();
      for (std::stringstream ss(seeds_arg); ss.good();) {
        std::string tok;
        std::getline(ss, tok, ',');
        if (!tok.empty()) spec.seeds.push_back(std::stoull(tok));
      }
      if (spec.seeds.empty()) {
        std::cerr << "error: empty seed list\n";
        return 1;
      }
      spec.power_sweep.clear();
      if (!sweep_arg.empty())
        for (std::stringstream ss(sweep_arg); ss.good();) {
          std::string tok;
          std::getline(ss, tok, ',');
          if (!tok.empty()) spec.power_sweep.push_back(std::stod(tok));
        }
      std::string err;
      RunStatus st = run_experiment(spec, &err);
      if (st != RunStatus::kOk) std::cerr << "error: " << err << "\n";
      else std::cout << "wrote " << spec.out_dir << "/summary.csv\n";
      return static_cast<int>(st);
    }
    if (cmp->parsed()) {
      std::string err;
      std::string table = compare_summaries(summaries, &err);
      if (table.empty()) {
        std::cerr << "error: " << err << "\n";
        return 1;
      }
      write_file_atomic(compare_out, table);
      std::cout << table;
      return 0;
    }
    if (dump->parsed()) {
      dump_seed_set = dump_seed_opt->count() > 0;
      ScenarioConfig cfg = load_config(dump_scenario_path);
      if (dump_seed_set) cfg.seed = dump_seed;
      std::cout << dump_scenario_text(cfg);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
