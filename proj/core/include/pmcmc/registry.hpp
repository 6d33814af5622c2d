#pragma once

#include <string>
#include <vector>

#include "pmcmc/ibm.hpp"
#include "pmcmc/linear_gaussian.hpp"
#include "pmcmc/model.hpp"
#include "pmcmc/observations.hpp"
#include "pmcmc/parameters.hpp"

namespace pmcmc {

/// Which model to build and how to configure its fixed (non-calibrated)
/// settings.
///
///   linear-gaussian: settings a, q, r, m0, s0; no presets.
///   ibm: presets "desk" (default) and "full"; settings are the fixed-rate
///        field names of ibm::Settings (prey_birth_rate, initial_prey, ...).
struct ModelSpec {
  std::string name = "linear-gaussian";
  std::string preset;
  Parameters settings;
  /// Sleep added to every advance() call of every particle.
  double advance_delay_ms = 0.0;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

[[nodiscard]] std::vector<std::string> registered_models();

/// Throws PreconditionError naming the offending setting.
[[nodiscard]] LinearGaussianSettings linear_gaussian_settings(const ModelSpec& spec);
[[nodiscard]] ibm::Settings ibm_settings(const ModelSpec& spec);

/// Throws PreconditionError for unknown models, presets or settings.
[[nodiscard]] ModelFactory make_factory(const ModelSpec& spec);

/// Calibrated parameters at their reference values.
[[nodiscard]] Parameters reference_parameters(const ModelSpec& spec);

/// Observation schedule used when a config gives none:
///   linear-gaussian: 1..10;
///   ibm desk: 50, 55, ..., 95;
///   ibm full: 1901, 1938, ..., 2604.
[[nodiscard]] std::vector<ModelTime> default_schedule(const ModelSpec& spec);

}  // namespace pmcmc
