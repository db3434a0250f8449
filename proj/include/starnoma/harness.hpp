#ifndef STARNOMA_HARNESS_HPP
#define STARNOMA_HARNESS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "starnoma/camappo.hpp"

namespace starnoma {

struct ExperimentSpec {
  std::string scenario_path;
  std::string algo;  // camappo | mappo | ppo | ca
  std::vector<std::uint64_t> seeds = {1};
  std::vector<double> power_sweep;  // empty: use the scenario's p_max
  std::string out_dir = "out";
  long budget = 2000;  // training steps per run
  bool force = false;
  std::optional<std::uint64_t> seed_override;
  bool dump_channels = false;
  int eval_episodes = 5;
};

enum class RunStatus : int { kOk = 0, kFailure = 1, kRefused = 2 };

RunStatus run_experiment(const ExperimentSpec& spec, std::string* error);

// Aligned (algorithm, p_max) table with seed mean/stddev; empty on error.
std::string compare_summaries(const std::vector<std::string>& summary_paths,
                              std::string* error);

std::string dump_scenario_text(const ScenarioConfig& cfg);

// atomic write (tmp + rename)
void write_file_atomic(const std::string& path, const std::string& content);

// numeric formatting used for every CSV cell
std::string fmt_num(double v);

std::uint64_t config_hash(const ScenarioConfig& cfg);

// parsed CSV: header + rows
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path);

}  // namespace starnoma

#endif  // STARNOMA_HARNESS_HPP
