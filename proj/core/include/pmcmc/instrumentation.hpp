#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace pmcmc {

enum class Stage : std::uint8_t {
  kInit,
  kRun,
  kObserve,
  kLikelihoodGather,
  kResample,
  kRoute,
  kReplicate,
  kTransferWait,
  kInitSync,
  kExit,
};

inline constexpr std::size_t kStageCount = 10;

[[nodiscard]] std::string_view stage_name(Stage stage) noexcept;
[[nodiscard]] std::optional<Stage> parse_stage(std::string_view name) noexcept;

/// Stages counted as useful work in the efficiency ratio.
[[nodiscard]] bool is_compute_stage(Stage stage) noexcept;

/// Master-side timings use this rank.
inline constexpr std::int32_t kMasterRank = -1;

struct StageTiming {
  Stage stage = Stage::kRun;
  std::int32_t worker = 0;
  std::uint64_t sample_index = 0;
  std::uint64_t observation_index = 0;
  double duration = 0.0;  ///< seconds
  /// Start on the recording process's monotonic clock, nanoseconds. Only
  /// comparable between timings from the same process.
  std::int64_t start_ns = 0;
};

/// Monotonic stopwatch.
class Stopwatch {
 public:
  using Clock = std::chrono::steady_clock;

  Stopwatch() : start_(Clock::now()) {}

  void restart() { start_ = Clock::now(); }
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }
  [[nodiscard]] std::int64_t start_ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(start_.time_since_epoch()).count();
  }

  /// Builds a timing for the interval since the last restart.
  [[nodiscard]] StageTiming lap(Stage stage, std::int32_t worker, std::uint64_t sample,
                                std::uint64_t observation) const {
    return {stage, worker, sample, observation, seconds(), start_ns()};
  }

 private:
  Clock::time_point start_;
};

[[nodiscard]] inline std::int64_t monotonic_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct StageSummary {
  std::uint64_t sample_index = 0;
  Stage stage = Stage::kRun;
  std::size_t count = 0;
  double mean = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
};

/// Lower and upper edges of a percentile band on `sorted` values: with
/// h = q (N - 1), the lower edge takes index floor(h) and the upper edge
/// index ceil(h), so the band always contains the interpolated percentile.
[[nodiscard]] double percentile_lower(std::span<const double> sorted, double q);
[[nodiscard]] double percentile_upper(std::span<const double> sorted, double q);

/// Mean and 10-90 % band per (sample, stage), pooling workers and
/// observation indices. Output is ordered by sample then stage.
[[nodiscard]] std::vector<StageSummary> aggregate_timings(std::span<const StageTiming> timings);

struct EfficiencyRecord {
  std::uint64_t sample_index = 0;
  double efficiency = 0.0;
};

/// Per sample: time in compute stages over total recorded worker time
/// (master timings excluded). Workers record wait stages explicitly, so the
/// denominator covers their whole participation in the run.
[[nodiscard]] std::vector<EfficiencyRecord> compute_efficiency(std::span<const StageTiming> timings);

/// Resampling diagnostics for one observation of one particle-filter run.
struct ResamplingEvent {
  std::uint64_t sample_index = 0;
  std::uint64_t observation_index = 0;
  double redraw_rate = 0.0;
  double move_fraction = 0.0;
  double copy_fraction = 0.0;
};

}  // namespace pmcmc
