#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pmcmc/model.hpp"

namespace pmcmc::ibm {

enum class Species : std::uint8_t { kPrey = 0, kPredator = 1 };
enum class Stage : std::uint8_t { kJuvenile = 0, kAdult = 1 };

struct Individual {
  Species species = Species::kPrey;
  Stage stage = Stage::kJuvenile;
  double mass = 1.0;

  friend bool operator==(const Individual&, const Individual&) = default;
};

/// Rates are per individual per time step. Only `k_prey` and `k_pred` are
/// calibrated; everything else is fixed configuration.
struct Settings {
  double k_prey = 25.0;          ///< prey half-saturation constant for self-inhibition
  double k_pred = 15.0;          ///< predator half-saturation constant for self-inhibition
  double prey_birth_rate = 0.3;  ///< Poisson mean offspring per adult prey
  double pred_birth_rate = 2.0;  ///< scaled by the feeding probability
  double prey_death_rate = 0.02;
  double pred_death_rate = 0.05;
  double prey_inhibition = 0.2;  ///< extra death probability at saturation
  double pred_inhibition = 0.6;
  double encounter_rate = 0.005;  ///< per predator-prey pair per step
  double growth_increment = 1.0;
  double juvenile_mass = 1.0;
  double maturation_mass = 3.0;
  double detection_mass = 2.0;
  std::uint32_t initial_prey = 100;
  std::uint32_t initial_pred = 10;

  /// Desk scale: roughly 85 prey and 11 predators at quasi-equilibrium.
  static Settings desk() { return {}; }
  /// Full scale: roughly 2000 prey and 30 predators after 1901 steps.
  static Settings full();

  /// Throws PreconditionError for out-of-range values.
  void validate() const;
  /// Copy with K_prey / K_pred (the only accepted names) taken from `params`.
  [[nodiscard]] Settings with(const Parameters& params) const;

  friend bool operator==(const Settings&, const Settings&) = default;
};

/// Small offset added to Poisson means so that an empty detectable
/// population does not make every non-zero count impossible.
inline constexpr double kObservationEpsilon = 1e-6;

struct State {
  std::vector<Individual> individuals;
  std::int64_t step = 0;

  friend bool operator==(const State&, const State&) = default;
};

struct Census {
  std::size_t prey = 0;
  std::size_t predators = 0;
  std::size_t prey_adults = 0;
  std::size_t predator_adults = 0;
  std::size_t prey_detectable = 0;
  std::size_t predator_detectable = 0;

  friend bool operator==(const Census&, const Census&) = default;
};

[[nodiscard]] Census census(const State& state, const Settings& settings);

/// All initial individuals are adults at the maturation mass.
[[nodiscard]] State initial_state(const Settings& settings);

/// Per-step death probability of one individual when its species has
/// `abundance` members: base + inhibition * N / (N + K).
[[nodiscard]] double death_probability(Species species, std::size_t abundance,
                                       const Settings& settings);

/// One time step. Abundances are taken at the start of the step; then, for
/// individuals in stored order:
///   1. growth: mass += growth_increment (no draw)
///   2. maturation: juvenile with mass >= maturation_mass becomes adult
///   3. predation: one uniform per prey; eaten if u < 1 - (1 - e)^(adult predators)
///   4. death: one uniform per survivor; dies if u < death_probability
///   5. reproduction: one Poisson draw per surviving adult; prey mean is
///      prey_birth_rate, predator mean is pred_birth_rate * (1 - (1 - e)^prey)
/// Dead and eaten individuals are removed keeping order; offspring are
/// appended as juveniles at juvenile_mass in parent order.
void step(State& state, const Settings& settings, Rng& rng);

/// Product over species of Poisson(count; detectable + epsilon), in log
/// space. `counts` is {prey, predator}; each must be a non-negative integer.
[[nodiscard]] double log_observe(const State& state, std::span<const double> counts,
                                 const Settings& settings);

class IbmModel final : public Model {
 public:
  explicit IbmModel(Settings defaults = Settings::desk()) : defaults_(defaults) {
    defaults_.validate();
    settings_ = defaults_;
  }

  void init(const Parameters& params, std::uint64_t seed) override;
  void advance(ModelTime target) override;
  void reseed(std::uint64_t seed) override { rng_.reseed(seed); }
  [[nodiscard]] double observe(std::span<const double> data) const override;
  [[nodiscard]] double log_observe(std::span<const double> data) const override;
  [[nodiscard]] Bytes save() const override;
  void load(std::span<const std::byte> state) override;
  [[nodiscard]] ModelTime time() const override { return state_.step; }
  [[nodiscard]] std::vector<std::string> observation_fields() const override {
    return {"prey", "predator"};
  }
  [[nodiscard]] std::vector<double> sample_observation(Rng& rng) const override;
  [[nodiscard]] std::vector<std::pair<std::string, double>> summary() const override;

  [[nodiscard]] const State& state() const noexcept { return state_; }
  [[nodiscard]] const Settings& settings() const noexcept { return settings_; }

 private:
  Settings defaults_;
  Settings settings_;
  State state_;
  Rng rng_;
};

/// Synthetic observation series from one realisation at `settings`.
[[nodiscard]] ObservationSeries synthesize(const Settings& settings,
                                           std::span<const ModelTime> schedule,
                                           std::uint64_t seed);

}  // namespace pmcmc::ibm
