#include "commands.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "pmcmc/balancer.hpp"
#include "pmcmc/errors.hpp"
#include "pmcmc/executor.hpp"
#include "pmcmc/io.hpp"
#include "pmcmc/linear_gaussian.hpp"
#include "pmcmc/random.hpp"
#include "pmcmc/registry.hpp"
#include "pmcmc/sampler.hpp"

namespace pmcmc::cli {

namespace {

ExecutorOptions executor_options(const EngineConfig& c) {
  ExecutorOptions o;
  o.workers = c.workers;
  o.resampling = c.resampling;
  o.timeout = std::chrono::milliseconds(std::llround(c.timeout_seconds * 1000.0));
  return o;
}

std::string join(std::span<const std::string> items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

CheckResult check_kalman(std::size_t workers) {
  const LinearGaussianSettings settings;
  const ModelSpec spec{"linear-gaussian", "", {}, 0.0};
  const auto factory = make_factory(spec);
  const Parameters theta{{"a", settings.a}};
  const auto series = synthesize(factory, theta, regular_schedule(1, 1, 10), 7);
  const double exact = kalman_log_marginal(settings, series);

  Executor executor(factory, ExecutorOptions{.workers = workers});
  constexpr std::size_t kReplicates = 50;
  std::vector<double> ratios;
  for (std::size_t k = 0; k < kReplicates; ++k) {
    const auto run = executor.run_particle_filter(theta, series, 1000, {11, k});
    ratios.push_back(std::exp(run.estimate.log_value - exact));
  }
  double mean = 0.0;
  for (double r : ratios) mean += r;
  mean /= static_cast<double>(ratios.size());
  double var = 0.0;
  for (double r : ratios) var += (r - mean) * (r - mean);
  var /= static_cast<double>(ratios.size() - 1);
  const double se = std::sqrt(var / static_cast<double>(ratios.size()));
  const double z = (mean - 1.0) / se;
  std::ostringstream detail;
  detail << "mean L/L_exact = " << mean << " (" << z << " standard errors from 1, "
         << kReplicates << " replicates of p=1000)";
  return {"kalman-vs-pf", std::abs(z) <= 3.0, detail.str()};
}

CheckResult check_routing_battery() {
  Rng rng(derive_seed({2024, 0, 0, 0, stream::kSynthesis}));
  constexpr int kInstances = 1000;
  for (int k = 0; k < kInstances; ++k) {
    const std::size_t p = 1 + static_cast<std::size_t>(rng.uniform() * 64.0);
    const std::size_t W = 1 + static_cast<std::size_t>(rng.uniform() * 16.0);
    const std::size_t w_max = (p + W - 1) / W;
    std::vector<ParticleLocation> locations;
    std::vector<std::size_t> load(W, 0);
    for (LineageId id = 0; id < p; ++id) {
      auto w = static_cast<WorkerRank>(rng.uniform() * static_cast<double>(W));
      while (load[w] >= w_max) w = static_cast<WorkerRank>((w + 1) % W);
      ++load[w];
      locations.push_back({id, w});
    }
    std::vector<double> probs(p);
    for (auto& q : probs) q = rng.bernoulli(0.3) ? 0.0 : rng.uniform() + 1e-3;
    probs[static_cast<std::size_t>(rng.uniform() * static_cast<double>(p))] = 1.0;
    const auto counts = resample_multinomial(normalize_weights(probs), p, rng.next());
    const Routing routing = compute_routing(counts, locations, W);
    if (auto why = check_routing(routing, counts, locations)) {
      return {"routing-battery", false, "instance " + std::to_string(k) + ": " + *why};
    }
    const ResampleCounts identity(p, 1);
    const Routing still = compute_routing(identity, locations, W);
    if (traffic_metrics(still).move_fraction != 0.0) {
      return {"routing-battery", false,
              "instance " + std::to_string(k) + ": identity resampling moved particles"};
    }
  }
  return {"routing-battery", true, std::to_string(kInstances) + " random instances (p<=64, W<=16)"};
}

struct InvarianceCase {
  std::string label;
  ModelSpec spec;
  Parameters theta;
  std::size_t observations;
  std::size_t particles;
};

CheckResult check_invariance(const CheckOptions& options) {
  const std::vector<InvarianceCase> cases = {
      {"linear-gaussian", {"linear-gaussian", "", {}, 0.0}, {{"a", 0.9}}, 10, 32},
      {"ibm", {"ibm", "desk", {}, 0.0}, {{"K_prey", 25.0}, {"K_pred", 15.0}}, 5, 16},
  };
  const std::vector<std::size_t> worker_counts = {1, 2, 4, 8};
  for (const auto& c : cases) {
    const auto factory = make_factory(c.spec);
    auto schedule = default_schedule(c.spec);
    schedule.resize(c.observations);
    const auto series = synthesize(factory, c.theta, schedule, 5);
    std::optional<FilterRun> reference;
    for (std::size_t W : worker_counts) {
      ExecutorOptions o;
      o.workers = W;
      o.decouple_resample_seed = options.decouple_resample_seed;
      Executor executor(factory, o);
      for (std::uint64_t sample = 0; sample < 2; ++sample) {
        FilterRun run = executor.run_particle_filter(c.theta, series, c.particles, {3, sample});
        if (sample != 0) continue;
        if (!reference) {
          reference = std::move(run);
          continue;
        }
        const bool same_value = std::bit_cast<std::uint64_t>(run.estimate.log_value) ==
                                std::bit_cast<std::uint64_t>(reference->estimate.log_value);
        if (!same_value || run.counts != reference->counts) {
          std::ostringstream detail;
          detail << c.label << ": W=" << W << " gives log L = " << run.estimate.log_value
                 << ", W=1 gives " << reference->estimate.log_value
                 << (run.counts != reference->counts ? " (resample counts differ)" : "");
          return {"worker-count-invariance", false, detail.str()};
        }
      }
    }
  }
  return {"worker-count-invariance", true,
          "log L and resample counts bit-identical for W in {1,2,4,8}"};
}

CheckResult check_roundtrip() {
  const std::vector<std::pair<ModelSpec, Parameters>> models = {
      {{"linear-gaussian", "", {}, 0.0}, {{"a", 0.9}}},
      {{"ibm", "desk", {}, 0.0}, {{"K_prey", 25.0}, {"K_pred", 15.0}}},
  };
  for (const auto& [spec, theta] : models) {
    const auto factory = make_factory(spec);
    auto model = factory();
    model->init(theta, 17);
    model->advance(10);
    const auto data = synthesize(factory, theta, std::vector<ModelTime>{12}, 1);
    const auto verdict = verify_state_roundtrip(*model, factory, 12, data.record(0), 23);
    if (!verdict.ok) return {"state-roundtrip", false, spec.name + ": " + verdict.divergence};
  }
  return {"state-roundtrip", true, "linear-gaussian and ibm save/load/run agree"};
}

}  // namespace

LoadedConfig load(const std::filesystem::path& path, const Overrides& overrides) {
  LoadedConfig out;
  out.config = load_config(path);
  if (overrides.workers) {
    if (*overrides.workers == 0) throw ConfigError("--workers", "must be >= 1");
    out.config.workers = *overrides.workers;
  }
  if (overrides.seed) out.config.seed = *overrides.seed;
  const auto base = path.parent_path();
  out.data_path = resolve_path(base, out.config.data);
  out.output_dir = overrides.output ? *overrides.output : resolve_path(base, out.config.output);
  if (overrides.output) {
    out.config.output = overrides.output->string();
    out.output_overridden = true;
  }
  return out;
}

std::filesystem::path cmd_synth(const LoadedConfig& loaded, std::ostream& log) {
  const EngineConfig& c = loaded.config;
  const auto factory = make_factory(c.model);
  const auto series = synthesize(factory, c.synth_parameters, c.synth_times, c.seed);
  std::filesystem::path target = loaded.data_path;
  if (loaded.output_overridden) {
    std::filesystem::create_directories(loaded.output_dir);
    target = loaded.output_dir / "observations.csv";
  } else if (target.has_parent_path()) {
    std::filesystem::create_directories(target.parent_path());
  }
  save_observations(target, series);
  log << "wrote " << series.size() << " observations of " << c.model.name << " to "
      << target.string() << '\n';
  return target;
}

RunSummary cmd_run(const LoadedConfig& loaded, std::ostream& log) {
  const EngineConfig& c = loaded.config;
  const auto factory = make_factory(c.model);
  const auto series = load_observations(loaded.data_path);
  const auto expected = factory()->observation_fields();
  if (!std::equal(series.fields().begin(), series.fields().end(), expected.begin(), expected.end())) {
    throw ConfigError(loaded.data_path.string() + ":1",
                      "columns " + join(series.fields()) + " do not match model fields " +
                          join(expected));
  }
  return run_model(loaded, factory, series, log);
}

RunSummary run_model(const LoadedConfig& loaded, const ModelFactory& factory,
                     const ObservationSeries& series, std::ostream& log) {
  const EngineConfig& c = loaded.config;
  std::filesystem::create_directories(loaded.output_dir);
  {
    std::ofstream cfg(loaded.output_dir / "config.json", std::ios::binary | std::ios::trunc);
    cfg << serialize_config(c);
  }
  std::ofstream events(loaded.output_dir / "events.log", std::ios::binary | std::ios::trunc);
  if (!events) throw ConfigError((loaded.output_dir / "events.log").string(), "cannot open for writing");

  Executor executor(factory, executor_options(c));
  ParticleFilterEvaluator evaluator(executor, series, c.particles, c.seed);
  SamplerSettings settings;
  settings.initial = c.initial;
  settings.scales = c.proposal_scales;
  settings.samples = c.samples;
  settings.acceptance_window = c.acceptance_window;
  settings.chain_index = c.seed;
  MetropolisHastings sampler(c.prior, settings);
  ChainWriter writer(loaded.output_dir, c.initial.names());

  RunSummary summary;
  sampler.run(evaluator, [&](const ChainRecord& r) {
    writer.write(r);
    ++summary.samples;
    if (r.sample_index > 0 && r.accepted) ++summary.accepted;
    if (r.degenerate_row) {
      ++summary.degenerate;
      std::ostringstream line;
      line << "sample " << r.sample_index << ": all particle weights zero at observation "
           << (*r.degenerate_row + 1) << "; log-likelihood -inf, proposal "
           << (r.sample_index == 0 ? "is the initial point" : "rejected");
      events << line.str() << '\n';
      log << "warning: " << line.str() << '\n';
    }
  });
  writer.flush();
  events.flush();

  const std::size_t moves = summary.samples > 1 ? summary.samples - 1 : 0;
  log << "samples " << summary.samples << ", accepted " << summary.accepted << "/" << moves;
  if (moves > 0) {
    log << " (" << static_cast<double>(summary.accepted) / static_cast<double>(moves) << ")";
  }
  log << ", degenerate " << summary.degenerate << "; output in " << loaded.output_dir.string()
      << '\n';
  return summary;
}

std::vector<CheckResult> cmd_check(const CheckOptions& options) {
  std::vector<CheckResult> results;
  auto guarded = [&](const char* name, auto&& fn) {
    try {
      results.push_back(fn());
    } catch (const std::exception& e) {
      results.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  guarded("state-roundtrip", [] { return check_roundtrip(); });
  guarded("routing-battery", [] { return check_routing_battery(); });
  guarded("kalman-vs-pf", [] { return check_kalman(2); });
  guarded("worker-count-invariance", [&] { return check_invariance(options); });
  return results;
}

}  // namespace pmcmc::cli
