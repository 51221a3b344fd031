#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcies/game.hpp"
#include "mcies/solver.hpp"

namespace mcies::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int { kOk = 0, kFailure = 1, kViolations = 2, kInputError = 3 };

/// Environment variable that overrides the output directory of every command.
inline constexpr const char* kOutputDirEnv = "MCIES_OUTPUT_DIR";

/// Parsed run configuration. Relative paths are resolved against the
/// directory of the config file.
struct RunConfig {
  std::string config_path;
  std::string system_path;
  std::string wt_samples;      // empty when absent
  std::string pv_samples;      // empty when absent
  std::string scenarios_path;  // precomputed joint set; wins over samples
  std::size_t k_min = 3;
  std::size_t k_max = 10;
  std::size_t kmeans_restarts = 1;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  solver::DEConfig de;
  dispatch::DispatchOptions dispatch;
  double eps_follower = 1e-4;
  double eps_leader = 0.005;
  std::size_t probes = 100;
  std::vector<double> caps{0, 100, 200, 300, 400, 500, 600, 700};
  /// FNV-1a over the config, the system file and every referenced data file.
  std::string hash;
};

RunConfig load_run_config(const std::string& path);

/// Output directory after the environment override; created on demand.
std::string output_dir(const RunConfig& config);

/// The game described by the config: system plus scenarios, read from the
/// scenario file or clustered from the sample files.
game::StackelbergGame build_game(const RunConfig& config);

struct ClusterOptions {
  std::optional<std::string> wt_samples;
  std::optional<std::string> pv_samples;
  std::optional<std::size_t> k_min;
  std::optional<std::size_t> k_max;
  std::optional<std::uint64_t> seed;
};

int cmd_cluster(const RunConfig& config, const ClusterOptions& options = {});

/// mode 1: full game; 2: flexibility removed at the mode-1 prices;
/// 3: full game with the tie-lines closed.
int cmd_schedule(const RunConfig& config, int mode = 1);
int cmd_modes(const RunConfig& config);
int cmd_sweep(const RunConfig& config, const std::optional<std::vector<double>>& caps = {});
int cmd_check(const RunConfig& config, const std::string& solution_path);

/// Parses argv and dispatches; never throws.
int run(int argc, char** argv);

}  // namespace mcies::cli
