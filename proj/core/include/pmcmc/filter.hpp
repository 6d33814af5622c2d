#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pmcmc {

/// Replica count per particle after resampling; sums to the ensemble size.
using ResampleCounts = std::vector<std::uint64_t>;

/// Rows are observations, columns are particles ordered by lineage id.
using WeightMatrix = std::vector<std::vector<double>>;

enum class ResamplingScheme { kMultinomial, kSystematic };

/// Scales non-negative weights to sum to one. Throws
/// DegenerateEnsembleError when all are zero or any is negative/non-finite.
[[nodiscard]] std::vector<double> normalize_weights(std::span<const double> weights);

/// Same for log weights, shifted by their maximum before exponentiating.
/// -inf entries become exact zeros; NaN or +inf is degenerate.
[[nodiscard]] std::vector<double> normalize_log_weights(std::span<const double> log_weights);

/// Multinomial(p, probs) by inversion: draw p uniforms from Rng(seed),
/// sort them ascending, and sweep the cumulative sum once. A uniform that
/// lands beyond the rounded cumulative total goes to the last index with
/// positive probability.
[[nodiscard]] ResampleCounts resample_multinomial(std::span<const double> probs, std::size_t p,
                                                  std::uint64_t seed);

/// Systematic resampling: one uniform u from Rng(seed), positions (u + k) / p.
[[nodiscard]] ResampleCounts resample_systematic(std::span<const double> probs, std::size_t p,
                                                 std::uint64_t seed);

[[nodiscard]] ResampleCounts resample(ResamplingScheme scheme, std::span<const double> probs,
                                      std::size_t p, std::uint64_t seed);

struct LikelihoodEstimate {
  /// sum_j log((1/p) sum_i w_ji); -inf when some row has zero mean.
  double log_value = 0.0;
  /// Delta-method standard deviation of log_value; NaN when degenerate.
  double log_std = 0.0;
  /// log of each row mean.
  std::vector<double> log_means;
  /// Sample variance of each row divided by its squared mean.
  std::vector<double> relative_variances;
  /// First observation (0-based row) whose weights were all zero.
  std::optional<std::size_t> degenerate_row;

  [[nodiscard]] bool degenerate() const noexcept { return degenerate_row.has_value(); }
};

/// Marginal-likelihood estimate from linear-space weights.
[[nodiscard]] LikelihoodEstimate estimate_marginal(const WeightMatrix& weights);

/// Same from log-space weights; rows are max-shifted so products over many
/// particles and observations do not underflow.
///
/// log_std^2 = sum_j s_j^2 / (p mean_j^2), with s_j^2 the unbiased sample
/// variance of row j (zero when p = 1 or when the row is constant). This is
/// the first-order expansion of log around each row mean, treating rows as
/// independent.
[[nodiscard]] LikelihoodEstimate estimate_marginal_log(const WeightMatrix& log_weights);

/// Fraction of particles with at least one replica.
[[nodiscard]] double redraw_rate(std::span<const std::uint64_t> counts);

}  // namespace pmcmc
