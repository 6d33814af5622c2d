#include "pmcmc/linear_gaussian.hpp"

#include <cmath>
#include <numbers>

#include "pmcmc/errors.hpp"

namespace pmcmc {

namespace {
constexpr std::uint16_t kStateVersion = 1;
}

void LinearGaussianSettings::validate() const {
  for (double v : {a, q, r, m0, s0}) {
    if (!std::isfinite(v)) throw PreconditionError("linear-gaussian settings must be finite");
  }
  if (!(q > 0.0)) throw PreconditionError("linear-gaussian: q must be > 0");
  if (!(r > 0.0)) throw PreconditionError("linear-gaussian: r must be > 0");
  if (!(s0 >= 0.0)) throw PreconditionError("linear-gaussian: s0 must be >= 0");
}

LinearGaussianSettings LinearGaussianSettings::with(const Parameters& params) const {
  LinearGaussianSettings out = *this;
  for (const auto& [name, value] : params.entries()) {
    if (name == "a") out.a = value;
    else if (name == "q") out.q = value;
    else if (name == "r") out.r = value;
    else if (name == "m0") out.m0 = value;
    else if (name == "s0") out.s0 = value;
    else throw PreconditionError("linear-gaussian: unknown parameter '" + name + "'");
  }
  out.validate();
  return out;
}

void LinearGaussianModel::init(const Parameters& params, std::uint64_t seed) {
  settings_ = defaults_.with(params);
  rng_.reseed(seed);
  x_ = settings_.m0 + settings_.s0 * rng_.normal();
  time_ = 0;
}

void LinearGaussianModel::advance(ModelTime target) {
  if (target < time_) {
    throw PreconditionError("linear-gaussian: cannot advance backwards from " +
                            std::to_string(time_) + " to " + std::to_string(target));
  }
  for (; time_ < target; ++time_) x_ = settings_.a * x_ + settings_.q * rng_.normal();
}

double LinearGaussianModel::log_observe(std::span<const double> data) const {
  if (data.size() != 1) throw PreconditionError("linear-gaussian: expected one observed value");
  const double r2 = settings_.r * settings_.r;
  const double d = data[0] - x_;
  return -0.5 * std::log(2.0 * std::numbers::pi * r2) - 0.5 * d * d / r2;
}

double LinearGaussianModel::observe(std::span<const double> data) const {
  return std::exp(log_observe(data));
}

std::vector<double> LinearGaussianModel::sample_observation(Rng& rng) const {
  return {x_ + settings_.r * rng.normal()};
}

std::vector<std::pair<std::string, double>> LinearGaussianModel::summary() const {
  return {{"time", static_cast<double>(time_)}, {"x", x_}};
}

Bytes LinearGaussianModel::save() const {
  ByteWriter w(96);
  w.u16(kStateVersion);
  for (double v : {settings_.a, settings_.q, settings_.r, settings_.m0, settings_.s0, x_}) w.f64(v);
  w.i64(time_);
  for (auto word : rng_.state()) w.u64(word);
  return std::move(w).take();
}

void LinearGaussianModel::load(std::span<const std::byte> state) {
  ByteReader r(state);
  if (const auto version = r.u16(); version != kStateVersion) {
    throw DeserializationError("linear-gaussian: unsupported state version " +
                               std::to_string(version));
  }
  LinearGaussianSettings s;
  s.a = r.f64();
  s.q = r.f64();
  s.r = r.f64();
  s.m0 = r.f64();
  s.s0 = r.f64();
  const double x = r.f64();
  const ModelTime t = r.i64();
  Rng::State words{};
  for (auto& word : words) word = r.u64();
  r.expect_end();
  try {
    s.validate();
  } catch (const PreconditionError& e) {
    throw DeserializationError(e.what());
  }
  settings_ = s;
  x_ = x;
  time_ = t;
  rng_.set_state(words);
}

double kalman_log_marginal(const LinearGaussianSettings& settings,
                           const ObservationSeries& observations) {
  settings.validate();
  double mean = settings.m0;
  double var = settings.s0 * settings.s0;
  ModelTime now = 0;
  double log_likelihood = 0.0;
  for (std::size_t j = 0; j < observations.size(); ++j) {
    const ModelTime t = observations.time(j);
    if (t < now) throw PreconditionError("kalman: observation time before model start");
    for (; now < t; ++now) {
      mean = settings.a * mean;
      var = settings.a * settings.a * var + settings.q * settings.q;
    }
    const double y = observations.record(j)[0];
    const double innovation_var = var + settings.r * settings.r;
    const double innovation = y - mean;
    log_likelihood += -0.5 * (std::log(2.0 * std::numbers::pi * innovation_var) +
                              innovation * innovation / innovation_var);
    const double gain = var / innovation_var;
    mean += gain * innovation;
    var *= (1.0 - gain);
  }
  return log_likelihood;
}

}  // namespace pmcmc
