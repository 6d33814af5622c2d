#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmcmc/bytes.hpp"
#include "pmcmc/observations.hpp"
#include "pmcmc/parameters.hpp"
#include "pmcmc/random.hpp"

namespace pmcmc {

/// Execution interface of a hidden-Markov model used as a particle.
///
/// A particle is initialised once, then alternately advanced to the next
/// observation time and weighted by the observation likelihood. Replication
/// goes through save()/load(), so save() must capture everything that
/// influences future behaviour, including the random stream and the
/// parameters passed to init().
class Model {
 public:
  virtual ~Model() = default;

  /// Builds the initial state x(t0) for parameters `params`. Unknown or
  /// invalid parameter names throw PreconditionError.
  virtual void init(const Parameters& params, std::uint64_t seed) = 0;

  /// Advances from the current time to `target` with the internal stream.
  virtual void advance(ModelTime target) = 0;

  /// Replaces the internal random stream without advancing.
  virtual void reseed(std::uint64_t seed) = 0;

  /// Observation likelihood P(data | h(x), theta) in linear space.
  [[nodiscard]] virtual double observe(std::span<const double> data) const = 0;

  /// Log of observe(); override when the linear value may underflow.
  [[nodiscard]] virtual double log_observe(std::span<const double> data) const;

  [[nodiscard]] virtual Bytes save() const = 0;
  /// Restores a state produced by save(); throws DeserializationError on
  /// malformed input and leaves the instance unusable only in that case.
  virtual void load(std::span<const std::byte> state) = 0;

  [[nodiscard]] virtual ModelTime time() const = 0;
  [[nodiscard]] virtual std::vector<std::string> observation_fields() const = 0;

  /// Draws one synthetic observation record from the current state.
  /// Models without a generative observation process keep the default,
  /// which throws.
  [[nodiscard]] virtual std::vector<double> sample_observation(Rng& rng) const;

  /// Named scalar view of the state for diagnostics and round-trip reports.
  [[nodiscard]] virtual std::vector<std::pair<std::string, double>> summary() const = 0;

  /// Convenience for reseed() followed by advance().
  void run(ModelTime target, std::uint64_t seed) {
    reseed(seed);
    advance(target);
  }
};

using ModelFactory = std::function<std::unique_ptr<Model>()>;

/// Outcome of a save/load round-trip check.
struct RoundtripVerdict {
  bool ok = true;
  /// Empty when ok; otherwise the first diverging summary field or byte.
  std::string divergence;
};

/// Saves `original`, loads the bytes into a fresh instance, then advances
/// both to `target` with `seed` and compares summaries, state bytes and
/// log_observe(data). Advances `original` as a side effect.
[[nodiscard]] RoundtripVerdict verify_state_roundtrip(Model& original, const ModelFactory& factory,
                                                      ModelTime target,
                                                      std::span<const double> data,
                                                      std::uint64_t seed);

/// Runs one realisation of the model and draws an observation at each
/// scheduled time. Deterministic in `seed`.
[[nodiscard]] ObservationSeries synthesize(const ModelFactory& factory, const Parameters& params,
                                           std::span<const ModelTime> schedule,
                                           std::uint64_t seed);

/// Wraps another model and blocks for `delay` on every advance() call.
/// Stands in for expensive simulators in scaling tests.
class DelayedModel final : public Model {
 public:
  DelayedModel(std::unique_ptr<Model> inner, std::chrono::microseconds delay)
      : inner_(std::move(inner)), delay_(delay) {}

  void init(const Parameters& params, std::uint64_t seed) override { inner_->init(params, seed); }
  void advance(ModelTime target) override;
  void reseed(std::uint64_t seed) override { inner_->reseed(seed); }
  [[nodiscard]] double observe(std::span<const double> data) const override {
    return inner_->observe(data);
  }
  [[nodiscard]] double log_observe(std::span<const double> data) const override {
    return inner_->log_observe(data);
  }
  [[nodiscard]] Bytes save() const override { return inner_->save(); }
  void load(std::span<const std::byte> state) override { inner_->load(state); }
  [[nodiscard]] ModelTime time() const override { return inner_->time(); }
  [[nodiscard]] std::vector<std::string> observation_fields() const override {
    return inner_->observation_fields();
  }
  [[nodiscard]] std::vector<double> sample_observation(Rng& rng) const override {
    return inner_->sample_observation(rng);
  }
  [[nodiscard]] std::vector<std::pair<std::string, double>> summary() const override {
    return inner_->summary();
  }

 private:
  std::unique_ptr<Model> inner_;
  std::chrono::microseconds delay_;
};

}  // namespace pmcmc
