#include "pmcmc/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pmcmc/errors.hpp"
#include "pmcmc/random.hpp"

namespace pmcmc {

namespace {

void check_probabilities(std::span<const double> probs, std::size_t p) {
  if (probs.empty()) throw PreconditionError("resample: empty probability vector");
  if (p == 0) throw PreconditionError("resample: ensemble size must be >= 1");
  double total = 0.0;
  for (double q : probs) {
    if (!std::isfinite(q) || q < 0.0) {
      throw PreconditionError("resample: probabilities must be finite and >= 0");
    }
    total += q;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw PreconditionError("resample: probabilities sum to " + std::to_string(total));
  }
}

std::size_t last_positive(std::span<const double> probs) {
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return probs.size() - 1;
}

/// Assigns ascending positions in [0, 1) to indices of the cumulative sum.
ResampleCounts sweep(std::span<const double> probs, std::span<const double> sorted_positions) {
  ResampleCounts counts(probs.size(), 0);
  const std::size_t fallback = last_positive(probs);
  const std::size_t last = probs.size() - 1;
  std::size_t i = 0;
  double cdf = probs[0];
  for (double u : sorted_positions) {
    while (i < last && u >= cdf) {
      ++i;
      cdf += probs[i];
    }
    ++counts[probs[i] > 0.0 ? i : fallback];
  }
  return counts;
}

}  // namespace

std::vector<double> normalize_weights(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw DegenerateEnsembleError("weights must be finite and non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw DegenerateEnsembleError("all particle weights are zero");
  std::vector<double> out(weights.begin(), weights.end());
  for (double& w : out) w /= total;
  return out;
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  double shift = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity()) {
      throw DegenerateEnsembleError("log weights must not be NaN or +inf");
    }
    shift = std::max(shift, lw);
  }
  if (!std::isfinite(shift)) throw DegenerateEnsembleError("all particle weights are zero");
  std::vector<double> out(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(log_weights[i] - shift);
    total += out[i];
  }
  for (double& w : out) w /= total;
  return out;
}

ResampleCounts resample_multinomial(std::span<const double> probs, std::size_t p,
                                    std::uint64_t seed) {
  check_probabilities(probs, p);
  Rng rng(seed);
  std::vector<double> positions(p);
  for (double& u : positions) u = rng.uniform();
  std::sort(positions.begin(), positions.end());
  return sweep(probs, positions);
}

ResampleCounts resample_systematic(std::span<const double> probs, std::size_t p,
                                   std::uint64_t seed) {
  check_probabilities(probs, p);
  Rng rng(seed);
  const double u = rng.uniform();
  std::vector<double> positions(p);
  for (std::size_t k = 0; k < p; ++k) {
    positions[k] = (u + static_cast<double>(k)) / static_cast<double>(p);
  }
  return sweep(probs, positions);
}

ResampleCounts resample(ResamplingScheme scheme, std::span<const double> probs, std::size_t p,
                        std::uint64_t seed) {
  switch (scheme) {
    case ResamplingScheme::kSystematic:
      return resample_systematic(probs, p, seed);
    case ResamplingScheme::kMultinomial:
      break;
  }
  return resample_multinomial(probs, p, seed);
}

LikelihoodEstimate estimate_marginal(const WeightMatrix& weights) {
  WeightMatrix logs(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j) {
    logs[j].reserve(weights[j].size());
    for (double w : weights[j]) {
      if (!std::isfinite(w) || w < 0.0) {
        throw PreconditionError("estimate_marginal: weights must be finite and >= 0");
      }
      logs[j].push_back(std::log(w));
    }
  }
  return estimate_marginal_log(logs);
}

LikelihoodEstimate estimate_marginal_log(const WeightMatrix& log_weights) {
  if (log_weights.empty()) throw PreconditionError("estimate_marginal: no observations");
  const std::size_t p = log_weights.front().size();
  if (p == 0) throw PreconditionError("estimate_marginal: no particles");

  LikelihoodEstimate est;
  double total_rel_var = 0.0;
  std::vector<double> shifted(p);
  for (std::size_t j = 0; j < log_weights.size(); ++j) {
    const auto& row = log_weights[j];
    if (row.size() != p) throw PreconditionError("estimate_marginal: ragged weight matrix");
    double shift = -std::numeric_limits<double>::infinity();
    double lowest = std::numeric_limits<double>::infinity();
    for (double lw : row) {
      if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity()) {
        throw PreconditionError("estimate_marginal: log weights must not be NaN or +inf");
      }
      shift = std::max(shift, lw);
      lowest = std::min(lowest, lw);
    }
    if (!std::isfinite(shift)) {
      est.degenerate_row = j;
      est.log_value = -std::numeric_limits<double>::infinity();
      est.log_std = std::numeric_limits<double>::quiet_NaN();
      return est;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      shifted[i] = std::exp(row[i] - shift);
      sum += shifted[i];
    }
    const double mean = sum / static_cast<double>(p);
    double rel_var = 0.0;
    if (p > 1 && lowest != shift) {
      double ss = 0.0;
      for (double w : shifted) ss += (w - mean) * (w - mean);
      rel_var = ss / static_cast<double>(p - 1) / (mean * mean);
    }
    est.log_means.push_back(shift + std::log(mean));
    est.relative_variances.push_back(rel_var);
    est.log_value += est.log_means.back();
    total_rel_var += rel_var;
  }
  est.log_std = std::sqrt(total_rel_var / static_cast<double>(p));
  return est;
}

double redraw_rate(std::span<const std::uint64_t> counts) {
  if (counts.empty()) throw PreconditionError("redraw_rate: empty counts");
  const auto survivors = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; });
  return static_cast<double>(survivors) / static_cast<double>(counts.size());
}

}  // namespace pmcmc
