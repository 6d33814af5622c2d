#include "pmcmc/registry.hpp"

#include <chrono>
#include <cmath>
#include <memory>

#include "pmcmc/errors.hpp"

namespace pmcmc {

namespace {

std::uint32_t as_count(const std::string& name, double value) {
  if (!(value >= 0.0) || value > 1e9 || std::floor(value) != value) {
    throw PreconditionError("ibm setting '" + name + "' must be a non-negative integer");
  }
  return static_cast<std::uint32_t>(value);
}

void apply(ibm::Settings& s, const std::string& name, double v) {
  if (name == "K_prey") s.k_prey = v;
  else if (name == "K_pred") s.k_pred = v;
  else if (name == "prey_birth_rate") s.prey_birth_rate = v;
  else if (name == "pred_birth_rate") s.pred_birth_rate = v;
  else if (name == "prey_death_rate") s.prey_death_rate = v;
  else if (name == "pred_death_rate") s.pred_death_rate = v;
  else if (name == "prey_inhibition") s.prey_inhibition = v;
  else if (name == "pred_inhibition") s.pred_inhibition = v;
  else if (name == "encounter_rate") s.encounter_rate = v;
  else if (name == "growth_increment") s.growth_increment = v;
  else if (name == "juvenile_mass") s.juvenile_mass = v;
  else if (name == "maturation_mass") s.maturation_mass = v;
  else if (name == "detection_mass") s.detection_mass = v;
  else if (name == "initial_prey") s.initial_prey = as_count(name, v);
  else if (name == "initial_pred") s.initial_pred = as_count(name, v);
  else throw PreconditionError("ibm: unknown setting '" + name + "'");
}

}  // namespace

std::vector<std::string> registered_models() { return {"ibm", "linear-gaussian"}; }

LinearGaussianSettings linear_gaussian_settings(const ModelSpec& spec) {
  if (!spec.preset.empty()) {
    throw PreconditionError("linear-gaussian: has no presets (got '" + spec.preset + "')");
  }
  return LinearGaussianSettings{}.with(spec.settings);
}

ibm::Settings ibm_settings(const ModelSpec& spec) {
  ibm::Settings s;
  if (spec.preset.empty() || spec.preset == "desk") {
    s = ibm::Settings::desk();
  } else if (spec.preset == "full") {
    s = ibm::Settings::full();
  } else {
    throw PreconditionError("ibm: unknown preset '" + spec.preset + "'");
  }
  for (const auto& [name, value] : spec.settings.entries()) apply(s, name, value);
  s.validate();
  return s;
}

ModelFactory make_factory(const ModelSpec& spec) {
  if (!(spec.advance_delay_ms >= 0.0) || !std::isfinite(spec.advance_delay_ms)) {
    throw PreconditionError("advance delay must be finite and >= 0");
  }
  ModelFactory base;
  if (spec.name == "linear-gaussian") {
    const auto settings = linear_gaussian_settings(spec);
    base = [settings] { return std::make_unique<LinearGaussianModel>(settings); };
  } else if (spec.name == "ibm") {
    const auto settings = ibm_settings(spec);
    base = [settings] { return std::make_unique<ibm::IbmModel>(settings); };
  } else {
    throw PreconditionError("unknown model '" + spec.name + "'");
  }
  if (spec.advance_delay_ms == 0.0) return base;
  const auto delay = std::chrono::microseconds(std::llround(spec.advance_delay_ms * 1000.0));
  return [base, delay] { return std::make_unique<DelayedModel>(base(), delay); };
}

Parameters reference_parameters(const ModelSpec& spec) {
  if (spec.name == "linear-gaussian") return {{"a", linear_gaussian_settings(spec).a}};
  if (spec.name == "ibm") {
    const auto s = ibm_settings(spec);
    return {{"K_prey", s.k_prey}, {"K_pred", s.k_pred}};
  }
  throw PreconditionError("unknown model '" + spec.name + "'");
}

std::vector<ModelTime> default_schedule(const ModelSpec& spec) {
  if (spec.name == "linear-gaussian") return regular_schedule(1, 1, 10);
  if (spec.name == "ibm") {
    if (spec.preset == "full") return regular_schedule(1901, 37, 20);
    return regular_schedule(50, 5, 10);
  }
  throw PreconditionError("unknown model '" + spec.name + "'");
}

}  // namespace pmcmc
