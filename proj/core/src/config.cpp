#include "pmcmc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "pmcmc/errors.hpp"

namespace pmcmc {

namespace {

using Json = nlohmann::ordered_json;

std::string child(const std::string& at, std::string_view key) {
  std::string escaped;
  for (char c : key) {
    if (c == '~') escaped += "~0";
    else if (c == '/') escaped += "~1";
    else escaped += c;
  }
  return at + "/" + escaped;
}

const Json& require(const Json& object, const std::string& at, const char* key) {
  if (!object.contains(key)) throw ConfigError(child(at, key), "missing required key");
  return object.at(key);
}

double number(const Json& j, const std::string& at) {
  if (!j.is_number()) throw ConfigError(at, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(at, "expected a finite number");
  return v;
}

std::uint64_t unsigned_integer(const Json& j, const std::string& at) {
  if (!j.is_number_unsigned()) {
    if (j.is_number_integer()) throw ConfigError(at, "expected a non-negative integer");
    throw ConfigError(at, "expected an integer");
  }
  return j.get<std::uint64_t>();
}

std::size_t count(const Json& j, const std::string& at) {
  const auto v = unsigned_integer(j, at);
  if (v == 0) throw ConfigError(at, "must be >= 1");
  return static_cast<std::size_t>(v);
}

std::string text(const Json& j, const std::string& at) {
  if (!j.is_string()) throw ConfigError(at, "expected a string");
  return j.get<std::string>();
}

const Json& object(const Json& j, const std::string& at) {
  if (!j.is_object()) throw ConfigError(at, "expected an object");
  return j;
}

Parameters parameters(const Json& j, const std::string& at) {
  Parameters out;
  for (const auto& [name, value] : object(j, at).items()) {
    out.set(name, number(value, child(at, name)));
  }
  return out;
}

Json parameters_json(const Parameters& p) {
  Json j = Json::object();
  for (const auto& [name, value] : p.entries()) j[name] = value;
  return j;
}

PriorTerm prior_term(const Json& j, const std::string& at) {
  object(j, at);
  if (j.size() != 1) throw ConfigError(at, "expected exactly one of 'uniform' or 'lognormal'");
  const auto it = j.begin();
  const std::string kind = it.key();
  const Json& args = it.value();
  const std::string args_at = child(at, kind);
  if (!args.is_array() || args.size() != 2) {
    throw ConfigError(args_at, "expected a two-element array");
  }
  const double first = number(args[0], args_at + "/0");
  const double second = number(args[1], args_at + "/1");
  try {
    if (kind == "uniform") return PriorTerm::uniform(first, second);
    if (kind == "lognormal") return PriorTerm::lognormal(first, second);
  } catch (const PreconditionError& e) {
    throw ConfigError(args_at, e.what());
  }
  throw ConfigError(child(at, kind), "unknown prior kind");
}

}  // namespace

std::string_view scheme_name(ResamplingScheme scheme) noexcept {
  return scheme == ResamplingScheme::kSystematic ? "systematic" : "multinomial";
}

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base.empty()) return p;
  return base / p;
}

EngineConfig parse_config(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  object(root, "");

  static const std::vector<std::string> known = {
      "version", "model", "prior", "initial", "proposal_scales", "samples", "particles",
      "workers", "seed", "resampling", "acceptance_window", "timeout_seconds", "data",
      "output", "synth"};
  for (const auto& [key, value] : root.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(child("", key), "unknown key");
    }
  }

  EngineConfig c;
  const auto version = unsigned_integer(require(root, "", "version"), "/version");
  if (version != static_cast<std::uint64_t>(kConfigVersion)) {
    throw ConfigError("/version", "unsupported version " + std::to_string(version) +
                                      " (expected " + std::to_string(kConfigVersion) + ")");
  }

  const Json& model = object(require(root, "", "model"), "/model");
  for (const auto& [key, value] : model.items()) {
    if (key != "name" && key != "preset" && key != "settings" && key != "advance_delay_ms") {
      throw ConfigError(child("/model", key), "unknown key");
    }
  }
  c.model.name = text(require(model, "/model", "name"), "/model/name");
  if (const auto models = registered_models(); std::ranges::find(models, c.model.name) == models.end()) {
    throw ConfigError("/model/name", "unknown model '" + c.model.name + "'");
  }
  if (model.contains("preset")) c.model.preset = text(model["preset"], "/model/preset");
  if (model.contains("settings")) c.model.settings = parameters(model["settings"], "/model/settings");
  if (model.contains("advance_delay_ms")) {
    c.model.advance_delay_ms = number(model["advance_delay_ms"], "/model/advance_delay_ms");
  }

  const Json& prior = object(require(root, "", "prior"), "/prior");
  if (prior.empty()) throw ConfigError("/prior", "at least one parameter required");
  for (const auto& [name, term] : prior.items()) {
    c.prior.add(name, prior_term(term, child("/prior", name)));
  }

  try {
    c.initial = root.contains("initial") ? parameters(root["initial"], "/initial")
                                         : reference_parameters(c.model);
  } catch (const PreconditionError& e) {
    throw ConfigError("/model", e.what());
  }
  if (root.contains("proposal_scales")) {
    c.proposal_scales = parameters(root["proposal_scales"], "/proposal_scales");
  } else {
    for (const auto& [name, term] : c.prior.terms()) c.proposal_scales.set(name, 0.0);
  }
  if (root.contains("samples")) c.samples = count(root["samples"], "/samples");
  if (root.contains("particles")) c.particles = count(root["particles"], "/particles");
  if (root.contains("workers")) c.workers = count(root["workers"], "/workers");
  if (root.contains("seed")) c.seed = unsigned_integer(root["seed"], "/seed");
  if (root.contains("resampling")) {
    const auto s = text(root["resampling"], "/resampling");
    if (s == "multinomial") c.resampling = ResamplingScheme::kMultinomial;
    else if (s == "systematic") c.resampling = ResamplingScheme::kSystematic;
    else throw ConfigError("/resampling", "expected 'multinomial' or 'systematic'");
  }
  if (root.contains("acceptance_window")) {
    c.acceptance_window = count(root["acceptance_window"], "/acceptance_window");
  }
  if (root.contains("timeout_seconds")) {
    c.timeout_seconds = number(root["timeout_seconds"], "/timeout_seconds");
  }
  if (root.contains("data")) c.data = text(root["data"], "/data");
  if (root.contains("output")) c.output = text(root["output"], "/output");

  c.synth_parameters = c.initial;
  if (root.contains("synth")) {
    const Json& synth = object(root["synth"], "/synth");
    for (const auto& [key, value] : synth.items()) {
      if (key != "parameters" && key != "times") throw ConfigError(child("/synth", key), "unknown key");
    }
    if (synth.contains("parameters")) {
      c.synth_parameters = parameters(synth["parameters"], "/synth/parameters");
    }
    if (synth.contains("times")) {
      const Json& times = synth["times"];
      if (!times.is_array() || times.empty()) {
        throw ConfigError("/synth/times", "expected a non-empty array");
      }
      for (std::size_t k = 0; k < times.size(); ++k) {
        const std::string at = "/synth/times/" + std::to_string(k);
        if (!times[k].is_number_integer()) throw ConfigError(at, "expected an integer");
        c.synth_times.push_back(times[k].get<ModelTime>());
      }
    }
  }
  if (c.synth_times.empty()) {
    try {
      c.synth_times = default_schedule(c.model);
    } catch (const PreconditionError& e) {
      throw ConfigError("/model/name", e.what());
    }
  }

  validate_config(c);
  const ParameterSpace space = c.prior.space();
  c.initial = space.canonical(c.initial);
  c.proposal_scales = space.canonical(c.proposal_scales);
  return c;
}

void validate_config(const EngineConfig& c) {
  if (c.version != kConfigVersion) throw ConfigError("/version", "unsupported version");
  try {
    (void)make_factory(c.model);
  } catch (const PreconditionError& e) {
    throw ConfigError("/model", e.what());
  }
  auto same_names = [&](const Parameters& p, const std::string& at) {
    for (const auto& [name, term] : c.prior.terms()) {
      if (!p.contains(name)) throw ConfigError(child(at, name), "missing; the prior declares it");
    }
    for (const auto& [name, value] : p.entries()) {
      bool declared = false;
      for (const auto& [n, term] : c.prior.terms()) declared = declared || n == name;
      if (!declared) throw ConfigError(child(at, name), "not declared in /prior");
    }
  };
  same_names(c.initial, "/initial");
  same_names(c.proposal_scales, "/proposal_scales");
  for (const auto& [name, value] : c.proposal_scales.entries()) {
    if (value < 0.0) throw ConfigError(child("/proposal_scales", name), "must be >= 0");
  }
  if (c.prior.log_density(c.prior.space().canonical(c.initial)) ==
      -std::numeric_limits<double>::infinity()) {
    throw ConfigError("/initial", "lies outside the prior support");
  }
  if (c.samples == 0) throw ConfigError("/samples", "must be >= 1");
  if (c.particles == 0) throw ConfigError("/particles", "must be >= 1");
  if (c.workers == 0) throw ConfigError("/workers", "must be >= 1");
  if (c.acceptance_window == 0) throw ConfigError("/acceptance_window", "must be >= 1");
  if (!(c.timeout_seconds > 0.0) || !std::isfinite(c.timeout_seconds)) {
    throw ConfigError("/timeout_seconds", "must be finite and > 0");
  }
  if (c.data.empty()) throw ConfigError("/data", "must not be empty");
  if (c.output.empty()) throw ConfigError("/output", "must not be empty");
  if (c.synth_times.empty()) throw ConfigError("/synth/times", "must not be empty");
  for (std::size_t k = 1; k < c.synth_times.size(); ++k) {
    if (c.synth_times[k] <= c.synth_times[k - 1]) {
      throw ConfigError("/synth/times/" + std::to_string(k), "times must strictly increase");
    }
  }
  if (c.synth_times.front() < 0) throw ConfigError("/synth/times/0", "must be >= 0");
}

EngineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ":" + e.location(), e.message());
  }
}

std::string serialize_config(const EngineConfig& c) {
  Json root = Json::object();
  root["version"] = c.version;
  Json model = Json::object();
  model["name"] = c.model.name;
  if (!c.model.preset.empty()) model["preset"] = c.model.preset;
  model["settings"] = parameters_json(c.model.settings);
  model["advance_delay_ms"] = c.model.advance_delay_ms;
  root["model"] = model;
  Json prior = Json::object();
  for (const auto& [name, term] : c.prior.terms()) {
    const char* kind = term.kind == PriorTerm::Kind::kUniform ? "uniform" : "lognormal";
    prior[name] = Json{{kind, Json::array({term.first, term.second})}};
  }
  root["prior"] = prior;
  root["initial"] = parameters_json(c.initial);
  root["proposal_scales"] = parameters_json(c.proposal_scales);
  root["samples"] = c.samples;
  root["particles"] = c.particles;
  root["workers"] = c.workers;
  root["seed"] = c.seed;
  root["resampling"] = std::string(scheme_name(c.resampling));
  root["acceptance_window"] = c.acceptance_window;
  root["timeout_seconds"] = c.timeout_seconds;
  root["data"] = c.data;
  root["output"] = c.output;
  root["synth"] = Json{{"parameters", parameters_json(c.synth_parameters)},
                       {"times", c.synth_times}};
  return root.dump(2) + "\n";
}

}  // namespace pmcmc
