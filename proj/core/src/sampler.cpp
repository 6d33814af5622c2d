#include "pmcmc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <utility>

#include "pmcmc/errors.hpp"

namespace pmcmc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

PriorTerm PriorTerm::uniform(double lower, double upper) {
  PriorTerm t{Kind::kUniform, lower, upper};
  t.validate();
  return t;
}

PriorTerm PriorTerm::lognormal(double mu, double sigma) {
  PriorTerm t{Kind::kLogNormal, mu, sigma};
  t.validate();
  return t;
}

void PriorTerm::validate() const {
  if (!std::isfinite(first) || !std::isfinite(second)) {
    throw PreconditionError("prior: hyperparameters must be finite");
  }
  if (kind == Kind::kUniform && !(first < second)) {
    throw PreconditionError("prior: uniform needs lower < upper");
  }
  if (kind == Kind::kLogNormal && !(second > 0.0)) {
    throw PreconditionError("prior: lognormal needs sigma > 0");
  }
}

double PriorTerm::log_density(double x) const {
  if (std::isnan(x)) return -kInf;
  switch (kind) {
    case Kind::kUniform:
      if (x < first || x > second) return -kInf;
      return -std::log(second - first);
    case Kind::kLogNormal: {
      if (!(x > 0.0) || std::isinf(x)) return -kInf;
      const double z = (std::log(x) - first) / second;
      return -0.5 * z * z - std::log(x * second) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
  }
  return -kInf;
}

Interval PriorTerm::support() const {
  if (kind == Kind::kUniform) return {first, second};
  return {0.0, kInf};
}

void Prior::add(std::string name, PriorTerm term) {
  term.validate();
  if (name.empty()) throw PreconditionError("prior: empty parameter name");
  for (const auto& [n, t] : terms_) {
    if (n == name) throw PreconditionError("prior: duplicate parameter '" + name + "'");
  }
  terms_.emplace_back(std::move(name), term);
}

double Prior::log_density(const Parameters& theta) const {
  if (theta.size() != terms_.size()) {
    throw PreconditionError("prior: theta has " + std::to_string(theta.size()) +
                            " entries, prior has " + std::to_string(terms_.size()));
  }
  double total = 0.0;
  for (const auto& [name, term] : terms_) {
    const auto x = theta.find(name);
    if (!x) throw PreconditionError("prior: theta lacks '" + name + "'");
    total += term.log_density(*x);
  }
  return total;
}

ParameterSpace Prior::space() const {
  ParameterSpace s;
  for (const auto& [name, term] : terms_) s.add(name, term.support());
  return s;
}

ParticleFilterEvaluator::ParticleFilterEvaluator(Executor& executor, ObservationSeries observations,
                                                 std::size_t particles, std::uint64_t chain_index)
    : executor_(executor),
      observations_(std::move(observations)),
      particles_(particles),
      chain_index_(chain_index) {
  if (particles_ == 0) throw PreconditionError("particle filter: ensemble size must be >= 1");
}

LikelihoodResult ParticleFilterEvaluator::evaluate(const Parameters& theta,
                                                   std::uint64_t sample_index) {
  FilterRun run = executor_.run_particle_filter(theta, observations_, particles_,
                                                SeedContext{chain_index_, sample_index});
  LikelihoodResult out;
  out.log_value = run.estimate.log_value;
  out.log_std = run.estimate.log_std;
  out.degenerate_row = run.estimate.degenerate_row;
  out.events = std::move(run.events);
  out.timings = std::move(run.timings);
  out.wall_seconds = run.wall_seconds;
  return out;
}

KalmanEvaluator::KalmanEvaluator(LinearGaussianSettings base, ObservationSeries observations)
    : base_(base), observations_(std::move(observations)) {
  base_.validate();
}

LikelihoodResult KalmanEvaluator::evaluate(const Parameters& theta, std::uint64_t) {
  LikelihoodResult out;
  out.log_value = kalman_log_marginal(base_.with(theta), observations_);
  out.log_std = 0.0;
  return out;
}

bool mh_accept(double current_log_posterior, double proposed_log_posterior, double u) noexcept {
  if (std::isnan(proposed_log_posterior) || proposed_log_posterior == -kInf) return false;
  if (current_log_posterior == -kInf) return true;
  return std::log(u) < proposed_log_posterior - current_log_posterior;
}

ChainRecord mh_step(const ChainRecord& current, const Parameters& scales,
                    LikelihoodEvaluator& evaluator, const Prior& prior, Rng& rng,
                    std::uint64_t sample_index) {
  Parameters proposal;
  for (const auto& [name, value] : current.theta.entries()) {
    const auto scale = scales.find(name);
    if (!scale) throw PreconditionError("mh_step: no proposal scale for '" + name + "'");
    proposal.set(name, value + *scale * rng.normal());
  }
  const double u = rng.uniform();

  ChainRecord next = current;
  next.sample_index = sample_index;
  next.accepted = false;
  next.proposal = proposal;
  next.proposal_log_likelihood = std::numeric_limits<double>::quiet_NaN();
  next.degenerate_row.reset();
  next.rolling_acceptance = std::numeric_limits<double>::quiet_NaN();
  next.events.clear();
  next.timings.clear();
  next.wall_seconds = 0.0;

  const double log_prior = prior.log_density(proposal);
  if (log_prior == -kInf) return next;

  LikelihoodResult result;
  try {
    result = evaluator.evaluate(proposal, sample_index);
  } catch (const std::exception& e) {
    throw SamplerError(sample_index, e.what());
  }
  next.proposal_log_likelihood = result.log_value;
  next.degenerate_row = result.degenerate_row;
  next.events = std::move(result.events);
  next.timings = std::move(result.timings);
  next.wall_seconds = result.wall_seconds;

  if (mh_accept(current.log_posterior(), result.log_value + log_prior, u)) {
    next.theta = std::move(proposal);
    next.log_likelihood = result.log_value;
    next.log_std = result.log_std;
    next.log_prior = log_prior;
    next.accepted = true;
  }
  return next;
}

MetropolisHastings::MetropolisHastings(Prior prior, SamplerSettings settings)
    : prior_(std::move(prior)), settings_(std::move(settings)) {
  if (settings_.samples == 0) throw PreconditionError("sampler: samples must be >= 1");
  if (settings_.acceptance_window == 0) {
    throw PreconditionError("sampler: acceptance window must be >= 1");
  }
  for (const auto& [name, value] : settings_.initial.entries()) {
    const auto scale = settings_.scales.find(name);
    if (!scale) throw PreconditionError("sampler: no proposal scale for '" + name + "'");
    if (*scale < 0.0) throw PreconditionError("sampler: negative proposal scale for '" + name + "'");
  }
}

void MetropolisHastings::run(LikelihoodEvaluator& evaluator, const RecordSink& sink) {
  ChainRecord current;
  current.sample_index = 0;
  current.theta = settings_.initial;
  current.proposal = settings_.initial;
  current.log_prior = prior_.log_density(settings_.initial);
  if (current.log_prior == -kInf) {
    throw PreconditionError("sampler: initial parameters lie outside the prior support");
  }
  LikelihoodResult first;
  try {
    first = evaluator.evaluate(settings_.initial, 0);
  } catch (const std::exception& e) {
    throw SamplerError(0, e.what());
  }
  current.log_likelihood = first.log_value;
  current.log_std = first.log_std;
  current.proposal_log_likelihood = first.log_value;
  current.degenerate_row = first.degenerate_row;
  current.accepted = true;
  current.events = std::move(first.events);
  current.timings = std::move(first.timings);
  current.wall_seconds = first.wall_seconds;
  sink(current);

  std::deque<bool> window;
  std::size_t accepted_in_window = 0;
  for (std::uint64_t i = 1; i < settings_.samples; ++i) {
    Rng rng(derive_seed({settings_.chain_index, i, 0, 0, stream::kProposal}));
    ChainRecord next = mh_step(current, settings_.scales, evaluator, prior_, rng, i);
    window.push_back(next.accepted);
    accepted_in_window += next.accepted ? 1 : 0;
    if (window.size() > settings_.acceptance_window) {
      accepted_in_window -= window.front() ? 1 : 0;
      window.pop_front();
    }
    next.rolling_acceptance =
        static_cast<double>(accepted_in_window) / static_cast<double>(window.size());
    sink(next);
    current = std::move(next);
  }
}

std::vector<ChainRecord> run_chain(Sampler& sampler, LikelihoodEvaluator& evaluator) {
  std::vector<ChainRecord> chain;
  sampler.run(evaluator, [&chain](const ChainRecord& r) { chain.push_back(r); });
  return chain;
}

}  // namespace pmcmc
