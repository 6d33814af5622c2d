#include "pmcmc/observations.hpp"

#include <cmath>

#include "pmcmc/errors.hpp"

namespace pmcmc {

ObservationSeries::ObservationSeries(std::vector<std::string> fields, std::vector<ModelTime> times,
                                     std::vector<std::vector<double>> records)
    : fields_(std::move(fields)), times_(std::move(times)), records_(std::move(records)) {
  if (times_.empty()) throw PreconditionError("observation series needs at least one time");
  if (fields_.empty()) throw PreconditionError("observation series needs at least one field");
  if (records_.size() != times_.size()) {
    throw PreconditionError("observation series: " + std::to_string(records_.size()) +
                            " records for " + std::to_string(times_.size()) + " times");
  }
  for (std::size_t j = 0; j < times_.size(); ++j) {
    if (j > 0 && times_[j] <= times_[j - 1]) {
      throw PreconditionError("observation times must be strictly increasing (index " +
                              std::to_string(j) + ")");
    }
    if (records_[j].size() != fields_.size()) {
      throw PreconditionError("observation record " + std::to_string(j) + " has " +
                              std::to_string(records_[j].size()) + " values, expected " +
                              std::to_string(fields_.size()));
    }
    for (double v : records_[j]) {
      if (!std::isfinite(v)) {
        throw PreconditionError("observation record " + std::to_string(j) + " is not finite");
      }
    }
  }
}

std::vector<ModelTime> regular_schedule(ModelTime start, ModelTime step, std::size_t count) {
  if (count == 0) throw PreconditionError("schedule needs at least one time");
  if (step <= 0) throw PreconditionError("schedule step must be positive");
  std::vector<ModelTime> times(count);
  for (std::size_t k = 0; k < count; ++k) times[k] = start + static_cast<ModelTime>(k) * step;
  return times;
}

}  // namespace pmcmc
