// CLI subcommands: each validates the config, runs one experiment family,
// and writes CSV series plus a JSON summary into the output directory.
#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "splitkit/config.hpp"

namespace splitkit {

enum ExitCode { kExitOk = 0, kExitValidation = 2, kExitNumerical = 3 };

struct RunContext {
  ExperimentConfig config;
  /// SHA-256 of the config file bytes (of the canonical dump when no file).
  std::string config_hash;
  std::filesystem::path out_dir;
};

/// Wall time per named block, in seconds.
using Timings = std::vector<std::pair<std::string, double>>;

struct PaperExample {
  Vec3 eigenvalues = Vec3::Zero();
  long long det = 0;
  long long trace = 0;
  double dyn_ratio = 0.0, vol_ratio = 0.0, bunch_ratio = 0.0;
  double flat_dyn_ratio = 0.0, flat_vol_ratio = 0.0, flat_bunch_ratio = 0.0;
  bool volume_dominated = false;
  bool center_bunched = false;
};

/// Eigen-data of the built-in matrix and its one-step ratios on the true
/// eigenplanes, both in the eigenbasis metric and in the flat metric.
PaperExample paper_example();

nlohmann::ordered_json cmd_paper_example(const RunContext& ctx, Timings& timings);
nlohmann::ordered_json cmd_splitting(const RunContext& ctx, Timings& timings);
nlohmann::ordered_json cmd_bracket(const RunContext& ctx, Timings& timings);
nlohmann::ordered_json cmd_surface(const RunContext& ctx, Timings& timings);
nlohmann::ordered_json cmd_uniqueness(const RunContext& ctx, Timings& timings);

/// Loads the config, applies overrides, dispatches, writes timing.json and
/// maps errors to exit codes (messages go to err).
int run_command(const std::string& command, const std::optional<std::string>& config_path,
                const std::optional<std::string>& out_dir, const std::optional<std::uint64_t>& seed,
                std::ostream& out, std::ostream& err);

}  // namespace splitkit
