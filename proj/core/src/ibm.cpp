#include "pmcmc/ibm.hpp"

#include <cmath>

#include "pmcmc/errors.hpp"

namespace pmcmc::ibm {

namespace {

constexpr std::uint16_t kStateVersion = 1;

bool is_count(double v) { return std::isfinite(v) && v >= 0.0 && std::floor(v) == v; }

double poisson_log_pmf(double k, double mean) {
  return k * std::log(mean) - mean - std::lgamma(k + 1.0);
}

void write_settings(ByteWriter& w, const Settings& s) {
  for (double v : {s.k_prey, s.k_pred, s.prey_birth_rate, s.pred_birth_rate, s.prey_death_rate,
                   s.pred_death_rate, s.prey_inhibition, s.pred_inhibition, s.encounter_rate,
                   s.growth_increment, s.juvenile_mass, s.maturation_mass, s.detection_mass}) {
    w.f64(v);
  }
  w.u32(s.initial_prey);
  w.u32(s.initial_pred);
}

Settings read_settings(ByteReader& r) {
  Settings s;
  for (double* field : {&s.k_prey, &s.k_pred, &s.prey_birth_rate, &s.pred_birth_rate,
                        &s.prey_death_rate, &s.pred_death_rate, &s.prey_inhibition,
                        &s.pred_inhibition, &s.encounter_rate, &s.growth_increment,
                        &s.juvenile_mass, &s.maturation_mass, &s.detection_mass}) {
    *field = r.f64();
  }
  s.initial_prey = r.u32();
  s.initial_pred = r.u32();
  return s;
}

}  // namespace

Settings Settings::full() {
  // Prey self-inhibition is saturated at N >> K_prey, so prey abundance is
  // held by predation and predator numbers by their feeding probability.
  Settings s;
  s.prey_birth_rate = 0.0535;
  s.prey_inhibition = 0.02;
  s.pred_birth_rate = 0.36;
  s.pred_inhibition = 0.1;
  s.encounter_rate = 0.0003;
  s.initial_prey = 2000;
  s.initial_pred = 30;
  return s;
}

void Settings::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw PreconditionError(std::string("ibm settings: ") + what);
  };
  for (double v : {k_prey, k_pred, prey_birth_rate, pred_birth_rate, prey_death_rate,
                   pred_death_rate, prey_inhibition, pred_inhibition, encounter_rate,
                   growth_increment, juvenile_mass, maturation_mass, detection_mass}) {
    require(std::isfinite(v), "values must be finite");
  }
  require(k_prey > 0.0 && k_pred > 0.0, "half-saturation constants must be > 0");
  require(prey_birth_rate >= 0.0 && pred_birth_rate >= 0.0, "birth rates must be >= 0");
  require(prey_death_rate >= 0.0 && pred_death_rate >= 0.0, "death rates must be >= 0");
  require(prey_inhibition >= 0.0 && pred_inhibition >= 0.0, "inhibition must be >= 0");
  require(prey_death_rate + prey_inhibition <= 1.0, "prey death probability may exceed 1");
  require(pred_death_rate + pred_inhibition <= 1.0, "predator death probability may exceed 1");
  require(encounter_rate >= 0.0 && encounter_rate <= 1.0, "encounter rate must be in [0, 1]");
  require(growth_increment >= 0.0, "growth increment must be >= 0");
  require(juvenile_mass > 0.0 && maturation_mass > 0.0 && detection_mass > 0.0,
          "masses must be > 0");
}

Settings Settings::with(const Parameters& params) const {
  Settings out = *this;
  for (const auto& [name, value] : params.entries()) {
    if (name == "K_prey") out.k_prey = value;
    else if (name == "K_pred") out.k_pred = value;
    else throw PreconditionError("ibm: unknown parameter '" + name + "'");
  }
  out.validate();
  return out;
}

Census census(const State& state, const Settings& settings) {
  Census c;
  for (const auto& ind : state.individuals) {
    const bool adult = ind.stage == Stage::kAdult;
    const bool detectable = ind.mass >= settings.detection_mass;
    if (ind.species == Species::kPrey) {
      ++c.prey;
      c.prey_adults += adult;
      c.prey_detectable += detectable;
    } else {
      ++c.predators;
      c.predator_adults += adult;
      c.predator_detectable += detectable;
    }
  }
  return c;
}

State initial_state(const Settings& settings) {
  State state;
  state.individuals.reserve(settings.initial_prey + settings.initial_pred);
  state.individuals.insert(state.individuals.end(), settings.initial_prey,
                           {Species::kPrey, Stage::kAdult, settings.maturation_mass});
  state.individuals.insert(state.individuals.end(), settings.initial_pred,
                           {Species::kPredator, Stage::kAdult, settings.maturation_mass});
  return state;
}

double death_probability(Species species, std::size_t abundance, const Settings& settings) {
  const double n = static_cast<double>(abundance);
  if (species == Species::kPrey) {
    return settings.prey_death_rate + settings.prey_inhibition * n / (n + settings.k_prey);
  }
  return settings.pred_death_rate + settings.pred_inhibition * n / (n + settings.k_pred);
}

void step(State& state, const Settings& settings, Rng& rng) {
  const Census start = census(state, settings);
  auto& inds = state.individuals;

  for (auto& ind : inds) {
    ind.mass += settings.growth_increment;
    if (ind.stage == Stage::kJuvenile && ind.mass >= settings.maturation_mass) {
      ind.stage = Stage::kAdult;
    }
  }

  std::vector<char> alive(inds.size(), 1);
  const double miss = 1.0 - settings.encounter_rate;
  const double p_eaten = 1.0 - std::pow(miss, static_cast<double>(start.predator_adults));
  for (std::size_t k = 0; k < inds.size(); ++k) {
    if (inds[k].species == Species::kPrey && rng.uniform() < p_eaten) alive[k] = 0;
  }

  const double d_prey = death_probability(Species::kPrey, start.prey, settings);
  const double d_pred = death_probability(Species::kPredator, start.predators, settings);
  for (std::size_t k = 0; k < inds.size(); ++k) {
    if (!alive[k]) continue;
    const double d = inds[k].species == Species::kPrey ? d_prey : d_pred;
    if (rng.uniform() < d) alive[k] = 0;
  }

  const double feeding = 1.0 - std::pow(miss, static_cast<double>(start.prey));
  std::vector<Individual> offspring;
  for (std::size_t k = 0; k < inds.size(); ++k) {
    if (!alive[k] || inds[k].stage != Stage::kAdult) continue;
    const bool prey = inds[k].species == Species::kPrey;
    const double mean = prey ? settings.prey_birth_rate : settings.pred_birth_rate * feeding;
    const std::uint64_t born = rng.poisson(mean);
    offspring.insert(offspring.end(), born,
                     {inds[k].species, Stage::kJuvenile, settings.juvenile_mass});
  }

  std::size_t kept = 0;
  for (std::size_t k = 0; k < inds.size(); ++k) {
    if (alive[k]) inds[kept++] = inds[k];
  }
  inds.resize(kept);
  inds.insert(inds.end(), offspring.begin(), offspring.end());
  ++state.step;
}

double log_observe(const State& state, std::span<const double> counts, const Settings& settings) {
  if (counts.size() != 2) throw PreconditionError("ibm: expected {prey, predator} counts");
  for (double k : counts) {
    if (!is_count(k)) {
      throw PreconditionError("ibm: observed counts must be non-negative integers, got " +
                              format_double(k));
    }
  }
  const Census c = census(state, settings);
  return poisson_log_pmf(counts[0], static_cast<double>(c.prey_detectable) + kObservationEpsilon) +
         poisson_log_pmf(counts[1],
                         static_cast<double>(c.predator_detectable) + kObservationEpsilon);
}

void IbmModel::init(const Parameters& params, std::uint64_t seed) {
  settings_ = defaults_.with(params);
  state_ = initial_state(settings_);
  rng_.reseed(seed);
}

void IbmModel::advance(ModelTime target) {
  if (target < state_.step) {
    throw PreconditionError("ibm: cannot advance backwards from " + std::to_string(state_.step) +
                            " to " + std::to_string(target));
  }
  while (state_.step < target) step(state_, settings_, rng_);
}

double IbmModel::log_observe(std::span<const double> data) const {
  return ibm::log_observe(state_, data, settings_);
}

double IbmModel::observe(std::span<const double> data) const { return std::exp(log_observe(data)); }

std::vector<double> IbmModel::sample_observation(Rng& rng) const {
  const Census c = census(state_, settings_);
  return {static_cast<double>(rng.poisson(static_cast<double>(c.prey_detectable) + kObservationEpsilon)),
          static_cast<double>(
              rng.poisson(static_cast<double>(c.predator_detectable) + kObservationEpsilon))};
}

std::vector<std::pair<std::string, double>> IbmModel::summary() const {
  const Census c = census(state_, settings_);
  double total_mass = 0.0;
  for (const auto& ind : state_.individuals) total_mass += ind.mass;
  return {{"time", static_cast<double>(state_.step)},
          {"prey", static_cast<double>(c.prey)},
          {"predator", static_cast<double>(c.predators)},
          {"prey_adult", static_cast<double>(c.prey_adults)},
          {"predator_adult", static_cast<double>(c.predator_adults)},
          {"prey_detectable", static_cast<double>(c.prey_detectable)},
          {"predator_detectable", static_cast<double>(c.predator_detectable)},
          {"total_mass", total_mass}};
}

Bytes IbmModel::save() const {
  ByteWriter w(160 + 10 * state_.individuals.size());
  w.u16(kStateVersion);
  write_settings(w, settings_);
  w.i64(state_.step);
  for (auto word : rng_.state()) w.u64(word);
  w.u64(state_.individuals.size());
  for (const auto& ind : state_.individuals) {
    w.u8(static_cast<std::uint8_t>(ind.species));
    w.u8(static_cast<std::uint8_t>(ind.stage));
    w.f64(ind.mass);
  }
  return std::move(w).take();
}

void IbmModel::load(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  if (const auto version = r.u16(); version != kStateVersion) {
    throw DeserializationError("ibm: unsupported state version " + std::to_string(version));
  }
  Settings s = read_settings(r);
  State st;
  st.step = r.i64();
  Rng::State words{};
  for (auto& word : words) word = r.u64();
  const std::size_t n = r.count(10);
  st.individuals.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto species = r.u8();
    const auto stage = r.u8();
    const double mass = r.f64();
    if (species > 1 || stage > 1 || !(mass > 0.0) || !std::isfinite(mass)) {
      throw DeserializationError("ibm: invalid individual record " + std::to_string(k));
    }
    st.individuals.push_back({static_cast<Species>(species), static_cast<Stage>(stage), mass});
  }
  r.expect_end();
  try {
    s.validate();
  } catch (const PreconditionError& e) {
    throw DeserializationError(e.what());
  }
  settings_ = s;
  state_ = std::move(st);
  rng_.set_state(words);
}

ObservationSeries synthesize(const Settings& settings, std::span<const ModelTime> schedule,
                             std::uint64_t seed) {
  const ModelFactory factory = [settings] { return std::make_unique<IbmModel>(settings); };
  return pmcmc::synthesize(factory, Parameters{}, schedule, seed);
}

}  // namespace pmcmc::ibm
