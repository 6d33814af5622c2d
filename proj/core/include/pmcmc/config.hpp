#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pmcmc/filter.hpp"
#include "pmcmc/observations.hpp"
#include "pmcmc/parameters.hpp"
#include "pmcmc/registry.hpp"
#include "pmcmc/sampler.hpp"

namespace pmcmc {

inline constexpr int kConfigVersion = 1;

/// Engine configuration, stored as JSON:
///
///   {
///     "version": 1,
///     "model": {"name": "ibm", "preset": "desk", "settings": {...}, "advance_delay_ms": 0},
///     "prior": {"K_prey": {"uniform": [1, 100]}, "K_pred": {"lognormal": [2.7, 0.5]}},
///     "initial": {"K_prey": 25, "K_pred": 15},
///     "proposal_scales": {"K_prey": 2, "K_pred": 1},
///     "samples": 100, "particles": 128, "workers": 4, "seed": 1,
///     "resampling": "multinomial", "acceptance_window": 20, "timeout_seconds": 300,
///     "data": "observations.csv", "output": "out",
///     "synth": {"parameters": {...}, "times": [50, 55, ...]}
///   }
///
/// Only "version", "model" and "prior" are required. Key order of "prior"
/// fixes the parameter order everywhere. "initial" defaults to the model's
/// reference parameters, "synth.parameters" to "initial", "synth.times" to
/// the model's default schedule. Relative paths resolve against the
/// directory of the config file.
struct EngineConfig {
  int version = kConfigVersion;
  ModelSpec model;
  Prior prior;
  Parameters initial;
  Parameters proposal_scales;
  std::size_t samples = 1;
  std::size_t particles = 64;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  ResamplingScheme resampling = ResamplingScheme::kMultinomial;
  std::size_t acceptance_window = 20;
  double timeout_seconds = 300.0;
  std::string data = "observations.csv";
  std::string output = "out";
  Parameters synth_parameters;
  std::vector<ModelTime> synth_times;

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

/// Throws ConfigError whose location is a JSON pointer ("/prior/K_prey").
[[nodiscard]] EngineConfig parse_config(std::string_view json_text);
[[nodiscard]] EngineConfig load_config(const std::filesystem::path& path);
/// Fully explicit JSON; parse_config(serialize_config(c)) == c.
[[nodiscard]] std::string serialize_config(const EngineConfig& config);

/// Cross-field checks (names agree, counts >= 1, initial inside prior
/// support, model buildable). parse_config already applies them.
void validate_config(const EngineConfig& config);

/// `path` relative to `base` unless absolute.
[[nodiscard]] std::filesystem::path resolve_path(const std::filesystem::path& base,
                                                 const std::string& path);

[[nodiscard]] std::string_view scheme_name(ResamplingScheme scheme) noexcept;

}  // namespace pmcmc
