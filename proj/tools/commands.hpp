#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pmcmc/config.hpp"

namespace pmcmc::cli {

/// Command-line overrides applied on top of a loaded config.
struct Overrides {
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output;
};

/// Loads `path` and applies overrides. Relative data/output paths in the
/// file resolve against its directory; --output resolves against the
/// current directory.
struct LoadedConfig {
  EngineConfig config;
  std::filesystem::path data_path;
  std::filesystem::path output_dir;
  bool output_overridden = false;
};
[[nodiscard]] LoadedConfig load(const std::filesystem::path& path, const Overrides& overrides);

/// Writes the synthetic observation CSV; returns its path. With an output
/// override the file goes to <output>/observations.csv, otherwise to the
/// config's data path.
std::filesystem::path cmd_synth(const LoadedConfig& loaded, std::ostream& log);

struct RunSummary {
  std::size_t samples = 0;
  std::size_t accepted = 0;
  std::size_t degenerate = 0;
};

/// Runs the chain and writes chain.csv, diagnostics.csv, summary.csv,
/// stages.csv, events.log and the effective config.json into the output
/// directory.
RunSummary cmd_run(const LoadedConfig& loaded, std::ostream& log);

/// cmd_run's chain and output stage with the model and data supplied by
/// the caller; the config's model section is only recorded.
RunSummary run_model(const LoadedConfig& loaded, const ModelFactory& factory,
                     const ObservationSeries& series, std::ostream& log);

struct CheckOptions {
  /// Key the resampling stream on the worker count (deliberate fault).
  bool decouple_resample_seed = false;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Self-contained verification suite; needs no config or data.
[[nodiscard]] std::vector<CheckResult> cmd_check(const CheckOptions& options);

}  // namespace pmcmc::cli
