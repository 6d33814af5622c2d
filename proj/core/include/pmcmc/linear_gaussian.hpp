#pragma once

#include "pmcmc/model.hpp"

namespace pmcmc {

/// x(t+1) = a x(t) + w, w ~ N(0, q^2), one transition per unit time step;
/// y ~ N(x, r^2); x(0) ~ N(m0, s0^2).
struct LinearGaussianSettings {
  double a = 0.9;
  double q = 1.0;
  double r = 1.0;
  double m0 = 0.0;
  double s0 = 1.0;

  /// Throws PreconditionError unless all finite, q > 0, r > 0, s0 >= 0.
  void validate() const;
  /// Copy with entries named a, q, r, m0, s0 taken from `params`; any other
  /// name is rejected.
  [[nodiscard]] LinearGaussianSettings with(const Parameters& params) const;

  friend bool operator==(const LinearGaussianSettings&, const LinearGaussianSettings&) = default;
};

class LinearGaussianModel final : public Model {
 public:
  explicit LinearGaussianModel(LinearGaussianSettings defaults = {}) : defaults_(defaults) {
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
  [[nodiscard]] ModelTime time() const override { return time_; }
  [[nodiscard]] std::vector<std::string> observation_fields() const override { return {"y"}; }
  [[nodiscard]] std::vector<double> sample_observation(Rng& rng) const override;
  [[nodiscard]] std::vector<std::pair<std::string, double>> summary() const override;

  [[nodiscard]] double state() const noexcept { return x_; }
  [[nodiscard]] const LinearGaussianSettings& settings() const noexcept { return settings_; }

 private:
  LinearGaussianSettings defaults_;
  LinearGaussianSettings settings_;
  double x_ = 0.0;
  ModelTime time_ = 0;
  Rng rng_;
};

/// Exact log marginal likelihood of `observations` (first field) by the
/// Kalman prediction/update recursion. Observation times must be >= 0.
[[nodiscard]] double kalman_log_marginal(const LinearGaussianSettings& settings,
                                         const ObservationSeries& observations);

}  // namespace pmcmc
