#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pmcmc/executor.hpp"
#include "pmcmc/instrumentation.hpp"
#include "pmcmc/linear_gaussian.hpp"
#include "pmcmc/observations.hpp"
#include "pmcmc/parameters.hpp"
#include "pmcmc/random.hpp"

namespace pmcmc {

/// Independent one-dimensional prior density.
struct PriorTerm {
  enum class Kind { kUniform, kLogNormal };

  Kind kind = Kind::kUniform;
  /// uniform: lower bound; lognormal: mu of log x.
  double first = 0.0;
  /// uniform: upper bound; lognormal: sigma of log x.
  double second = 1.0;

  static PriorTerm uniform(double lower, double upper);
  static PriorTerm lognormal(double mu, double sigma);

  void validate() const;
  /// -inf outside the support.
  [[nodiscard]] double log_density(double x) const;
  [[nodiscard]] Interval support() const;

  friend bool operator==(const PriorTerm&, const PriorTerm&) = default;
};

/// Product of independent terms; declaration order fixes parameter order.
class Prior {
 public:
  void add(std::string name, PriorTerm term);

  /// Sum of term log densities. Throws PreconditionError if `theta` lacks a
  /// prior parameter or carries an extra one.
  [[nodiscard]] double log_density(const Parameters& theta) const;
  [[nodiscard]] ParameterSpace space() const;

  [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
  [[nodiscard]] const std::vector<std::pair<std::string, PriorTerm>>& terms() const noexcept {
    return terms_;
  }

  friend bool operator==(const Prior&, const Prior&) = default;

 private:
  std::vector<std::pair<std::string, PriorTerm>> terms_;
};

/// Outcome of one likelihood evaluation.
struct LikelihoodResult {
  double log_value = 0.0;
  double log_std = 0.0;
  std::optional<std::size_t> degenerate_row;
  std::vector<ResamplingEvent> events;
  std::vector<StageTiming> timings;
  double wall_seconds = 0.0;
};

class LikelihoodEvaluator {
 public:
  virtual ~LikelihoodEvaluator() = default;
  /// Estimate of log L(D | theta) for the given chain position.
  [[nodiscard]] virtual LikelihoodResult evaluate(const Parameters& theta,
                                                  std::uint64_t sample_index) = 0;
};

/// Parallel particle filter with seeds (chain_index, sample_index, ...).
class ParticleFilterEvaluator final : public LikelihoodEvaluator {
 public:
  ParticleFilterEvaluator(Executor& executor, ObservationSeries observations, std::size_t particles,
                          std::uint64_t chain_index);

  [[nodiscard]] LikelihoodResult evaluate(const Parameters& theta,
                                          std::uint64_t sample_index) override;

 private:
  Executor& executor_;
  ObservationSeries observations_;
  std::size_t particles_;
  std::uint64_t chain_index_;
};

/// Exact Kalman likelihood for the linear-Gaussian model. `theta` overrides
/// the named fields of `base`.
class KalmanEvaluator final : public LikelihoodEvaluator {
 public:
  KalmanEvaluator(LinearGaussianSettings base, ObservationSeries observations);

  [[nodiscard]] LikelihoodResult evaluate(const Parameters& theta,
                                          std::uint64_t sample_index) override;

 private:
  LinearGaussianSettings base_;
  ObservationSeries observations_;
};

struct ChainRecord {
  std::uint64_t sample_index = 0;
  Parameters theta;
  double log_likelihood = 0.0;
  double log_std = 0.0;
  double log_prior = 0.0;
  bool accepted = false;
  /// Proposed point, kept when rejected. Equals theta for the initial record.
  Parameters proposal;
  /// Estimate at the proposal; NaN when the prior ruled it out.
  double proposal_log_likelihood = std::numeric_limits<double>::quiet_NaN();
  /// Set when the proposal's filter run hit an all-zero weight row.
  std::optional<std::size_t> degenerate_row;
  /// Acceptance rate over the trailing window; NaN for the initial record.
  double rolling_acceptance = std::numeric_limits<double>::quiet_NaN();
  std::vector<ResamplingEvent> events;
  std::vector<StageTiming> timings;
  double wall_seconds = 0.0;

  [[nodiscard]] double log_posterior() const noexcept { return log_likelihood + log_prior; }
};

/// accept iff u < exp(proposed - current), evaluated as log(u) < difference.
/// A -inf proposal is never accepted; a -inf current accepts any finite
/// proposal.
[[nodiscard]] bool mh_accept(double current_log_posterior, double proposed_log_posterior,
                             double u) noexcept;

/// One Metropolis-Hastings transition with a Gaussian random-walk proposal.
/// Draws one normal per parameter (in theta order) then one uniform, all
/// from `rng`. A rejected record repeats current's theta and stored
/// estimate.
[[nodiscard]] ChainRecord mh_step(const ChainRecord& current, const Parameters& scales,
                                  LikelihoodEvaluator& evaluator, const Prior& prior, Rng& rng,
                                  std::uint64_t sample_index);

struct SamplerSettings {
  Parameters initial;
  /// Random-walk standard deviation per parameter, same names as initial.
  Parameters scales;
  std::size_t samples = 1;
  std::size_t acceptance_window = 20;
  std::uint64_t chain_index = 0;
};

using RecordSink = std::function<void(const ChainRecord&)>;

/// Posterior sampler over theta. Implementations emit records in order.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual void run(LikelihoodEvaluator& evaluator, const RecordSink& sink) = 0;
};

/// Pseudo-marginal random-walk Metropolis-Hastings. Sample 0 is the
/// initial point; sample i >= 1 uses proposal stream
/// derive_seed(chain, i, 0, 0, stream::kProposal).
class MetropolisHastings final : public Sampler {
 public:
  MetropolisHastings(Prior prior, SamplerSettings settings);
  void run(LikelihoodEvaluator& evaluator, const RecordSink& sink) override;

 private:
  Prior prior_;
  SamplerSettings settings_;
};

/// Runs `sampler` and collects the chain.
[[nodiscard]] std::vector<ChainRecord> run_chain(Sampler& sampler, LikelihoodEvaluator& evaluator);

}  // namespace pmcmc
