#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pmcmc/observations.hpp"
#include "pmcmc/sampler.hpp"

namespace pmcmc {

/// Observation CSV: header `time,<field>...`, one row per observation
/// time, '.' decimal separator, shortest round-trip number formatting.
void write_observations(std::ostream& out, const ObservationSeries& series);
/// Throws ConfigError located at `source:line` for malformed input.
[[nodiscard]] ObservationSeries read_observations(std::istream& in, std::string_view source);

void save_observations(const std::filesystem::path& path, const ObservationSeries& series);
[[nodiscard]] ObservationSeries load_observations(const std::filesystem::path& path);

/// Streams a chain into `dir`:
///   chain.csv        sample,theta_<name>...,log_likelihood,log_std,log_prior,accepted
///   diagnostics.csv  sample,observation,redraw_rate,move_fraction,copy_fraction,stage,worker,duration
///                    (one row per resampling event with the stage columns empty, then
///                    one row per stage timing with the traffic columns empty; master
///                    timings use worker -1)
///   summary.csv      sample,accepted,rolling_acceptance,efficiency,wall_seconds,degenerate_observation
///   stages.csv       sample,stage,count,mean,p10,p90
/// chain.csv depends only on the chain itself, never on timing.
class ChainWriter {
 public:
  ChainWriter(const std::filesystem::path& dir, const std::vector<std::string>& parameter_names);

  void write(const ChainRecord& record);
  void flush();

 private:
  std::vector<std::string> names_;
  std::ofstream chain_;
  std::ofstream diagnostics_;
  std::ofstream summary_;
  std::ofstream stages_;
};

/// Number text used in every CSV: shortest round-trip form, or nan/inf/-inf.
[[nodiscard]] std::string csv_number(double value);

}  // namespace pmcmc
