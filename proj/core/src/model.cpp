#include "pmcmc/model.hpp"

#include <bit>
#include <cmath>
#include <thread>

#include "pmcmc/errors.hpp"

namespace pmcmc {

double Model::log_observe(std::span<const double> data) const { return std::log(observe(data)); }

std::vector<double> Model::sample_observation(Rng&) const {
  throw PreconditionError("model does not support synthetic observations");
}

void DelayedModel::advance(ModelTime target) {
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
  inner_->advance(target);
}

namespace {

std::string first_byte_difference(const Bytes& a, const Bytes& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) return "byte " + std::to_string(i);
  }
  return "length " + std::to_string(a.size()) + " vs " + std::to_string(b.size());
}

std::string first_summary_difference(const std::vector<std::pair<std::string, double>>& a,
                                     const std::vector<std::pair<std::string, double>>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].first != b[i].first) return "field order at '" + a[i].first + "'";
    if (std::bit_cast<std::uint64_t>(a[i].second) != std::bit_cast<std::uint64_t>(b[i].second)) {
      return a[i].first + " (" + format_double(a[i].second) + " vs " + format_double(b[i].second) +
             ")";
    }
  }
  if (a.size() != b.size()) return "summary length";
  return {};
}

}  // namespace

RoundtripVerdict verify_state_roundtrip(Model& original, const ModelFactory& factory,
                                        ModelTime target, std::span<const double> data,
                                        std::uint64_t seed) {
  const Bytes saved = original.save();
  auto copy = factory();
  copy->load(saved);

  if (auto d = first_summary_difference(original.summary(), copy->summary()); !d.empty()) {
    return {false, "after load: " + d};
  }
  if (const Bytes resaved = copy->save(); resaved != saved) {
    return {false, "after load: state " + first_byte_difference(saved, resaved)};
  }

  original.run(target, seed);
  copy->run(target, seed);

  if (auto d = first_summary_difference(original.summary(), copy->summary()); !d.empty()) {
    return {false, "after advance: " + d};
  }
  const Bytes a = original.save();
  const Bytes b = copy->save();
  if (a != b) return {false, "after advance: state " + first_byte_difference(a, b)};

  const double la = original.log_observe(data);
  const double lb = copy->log_observe(data);
  if (std::bit_cast<std::uint64_t>(la) != std::bit_cast<std::uint64_t>(lb)) {
    return {false, "log_observe (" + format_double(la) + " vs " + format_double(lb) + ")"};
  }
  return {};
}

ObservationSeries synthesize(const ModelFactory& factory, const Parameters& params,
                             std::span<const ModelTime> schedule, std::uint64_t seed) {
  if (schedule.empty()) throw PreconditionError("synthesis schedule is empty");
  auto model = factory();
  model->init(params, derive_seed({seed, 0, 0, 0, stream::kParticle}));
  Rng observation_rng(derive_seed({seed, 0, 0, 0, stream::kSynthesis}));
  std::vector<std::vector<double>> records;
  records.reserve(schedule.size());
  for (const ModelTime t : schedule) {
    model->advance(t);
    records.push_back(model->sample_observation(observation_rng));
  }
  return {model->observation_fields(), {schedule.begin(), schedule.end()}, std::move(records)};
}

}  // namespace pmcmc
