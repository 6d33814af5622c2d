#include "pmcmc/instrumentation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "pmcmc/errors.hpp"

namespace pmcmc {

namespace {

constexpr std::array<std::string_view, kStageCount> kStageNames = {
    "init",    "run",   "observe",   "likelihood-gather", "resample",
    "route",   "replicate", "transfer-wait", "init-sync", "exit"};

}  // namespace

std::string_view stage_name(Stage stage) noexcept {
  return kStageNames[static_cast<std::size_t>(stage)];
}

std::optional<Stage> parse_stage(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  return std::nullopt;
}

bool is_compute_stage(Stage stage) noexcept {
  switch (stage) {
    case Stage::kInit:
    case Stage::kRun:
    case Stage::kObserve:
    case Stage::kResample:
    case Stage::kReplicate:
      return true;
    default:
      return false;
  }
}

double percentile_lower(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw PreconditionError("percentile of empty set");
  const double h = q * static_cast<double>(sorted.size() - 1);
  return sorted[static_cast<std::size_t>(std::floor(h))];
}

double percentile_upper(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw PreconditionError("percentile of empty set");
  const double h = q * static_cast<double>(sorted.size() - 1);
  return sorted[std::min(sorted.size() - 1, static_cast<std::size_t>(std::ceil(h)))];
}

std::vector<StageSummary> aggregate_timings(std::span<const StageTiming> timings) {
  std::map<std::pair<std::uint64_t, Stage>, std::vector<double>> groups;
  for (const auto& t : timings) groups[{t.sample_index, t.stage}].push_back(t.duration);

  std::vector<StageSummary> out;
  out.reserve(groups.size());
  for (auto& [key, values] : groups) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    out.push_back({key.first, key.second, values.size(), sum / static_cast<double>(values.size()),
                   percentile_lower(values, 0.1), percentile_upper(values, 0.9)});
  }
  return out;
}

std::vector<EfficiencyRecord> compute_efficiency(std::span<const StageTiming> timings) {
  std::map<std::uint64_t, std::pair<double, double>> per_sample;  // compute, total
  for (const auto& t : timings) {
    if (t.worker == kMasterRank) continue;
    auto& [compute, total] = per_sample[t.sample_index];
    total += t.duration;
    if (is_compute_stage(t.stage)) compute += t.duration;
  }
  std::vector<EfficiencyRecord> out;
  for (const auto& [sample, acc] : per_sample) {
    const double e = acc.second > 0.0 ? acc.first / acc.second : 0.0;
    out.push_back({sample, std::clamp(e, 0.0, 1.0)});
  }
  return out;
}

}  // namespace pmcmc
