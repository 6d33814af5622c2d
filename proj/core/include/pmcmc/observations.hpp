#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pmcmc {

/// Model time. Shipped models advance in integer steps.
using ModelTime = std::int64_t;

/// Time-ordered observations: one record of named real fields per time.
class ObservationSeries {
 public:
  /// Throws PreconditionError unless times are strictly increasing,
  /// non-empty, and every record has one value per field.
  ObservationSeries(std::vector<std::string> fields, std::vector<ModelTime> times,
                    std::vector<std::vector<double>> records);

  [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
  [[nodiscard]] std::span<const std::string> fields() const noexcept { return fields_; }
  [[nodiscard]] std::span<const ModelTime> times() const noexcept { return times_; }
  [[nodiscard]] ModelTime time(std::size_t j) const { return times_.at(j); }
  [[nodiscard]] std::span<const double> record(std::size_t j) const { return records_.at(j); }

  friend bool operator==(const ObservationSeries&, const ObservationSeries&) = default;

 private:
  std::vector<std::string> fields_;
  std::vector<ModelTime> times_;
  std::vector<std::vector<double>> records_;
};

/// Evenly spaced schedule `start, start + step, ...` with `count` entries.
[[nodiscard]] std::vector<ModelTime> regular_schedule(ModelTime start, ModelTime step,
                                                      std::size_t count);

}  // namespace pmcmc
