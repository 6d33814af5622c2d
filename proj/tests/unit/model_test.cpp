#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <vector>

#include "pmcmc/errors.hpp"
#include "pmcmc/linear_gaussian.hpp"
#include "pmcmc/model.hpp"

namespace pmcmc {
namespace {

// Joint density of (y_1..y_n) written out directly: x_t = a^t x_0 + sum_k
// a^(t-k) w_k, so Cov(x_s, x_t) = a^(s+t) s0^2 + q^2 sum_{k<=min(s,t)}
// a^(s-k) a^(t-k); y = x + v with Var(v) = r^2 I. Evaluated by Cholesky.
double dense_log_marginal(const LinearGaussianSettings& s, const std::vector<ModelTime>& times,
                          const std::vector<double>& y) {
  const std::size_t n = times.size();
  std::vector<std::vector<double>> cov(n, std::vector<double>(n, 0.0));
  std::vector<double> mean(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ti = static_cast<int>(times[i]);
    mean[i] = std::pow(s.a, ti) * s.m0;
    for (std::size_t j = 0; j < n; ++j) {
      const auto tj = static_cast<int>(times[j]);
      double c = std::pow(s.a, ti + tj) * s.s0 * s.s0;
      for (int k = 1; k <= std::min(ti, tj); ++k) c += s.q * s.q * std::pow(s.a, ti - k) * std::pow(s.a, tj - k);
      cov[i][j] = c + (i == j ? s.r * s.r : 0.0);
    }
  }
  std::vector<std::vector<double>> L(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = cov[i][j];
      for (std::size_t k = 0; k < j; ++k) sum -= L[i][k] * L[j][k];
      L[i][j] = (i == j) ? std::sqrt(sum) : sum / L[j][j];
    }
  }
  std::vector<double> z(n);
  double logdet = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = y[i] - mean[i];
    for (std::size_t k = 0; k < i; ++k) sum -= L[i][k] * z[k];
    z[i] = sum / L[i][i];
    quad += z[i] * z[i];
    logdet += 2.0 * std::log(L[i][i]);
  }
  return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

TEST(Kalman, ZeroVarianceLimit) {
  LinearGaussianSettings s;
  s.a = 1.0;
  s.q = 1e-8;
  s.s0 = 0.0;
  s.m0 = 0.7;
  s.r = 1.0;
  const ObservationSeries obs({"y"}, {1}, {{0.7}});
  EXPECT_NEAR(kalman_log_marginal(s, obs), -0.5 * std::log(2.0 * std::numbers::pi), 1e-12);
}

TEST(Kalman, MatchesDenseGaussianOracle) {
  const LinearGaussianSettings s;  // a=0.9, q=1, r=1, m0=0, s0=1
  const ObservationSeries obs({"y"}, {1, 2, 3}, {{0.5}, {-0.3}, {1.1}});
  EXPECT_NEAR(kalman_log_marginal(s, obs), dense_log_marginal(s, {1, 2, 3}, {0.5, -0.3, 1.1}),
              1e-12);
}

TEST(Kalman, MatchesDenseOracleOnIrregularTimes) {
  LinearGaussianSettings s;
  s.a = -0.7;
  s.q = 0.4;
  s.r = 2.0;
  s.m0 = 1.5;
  s.s0 = 0.3;
  const std::vector<ModelTime> t{0, 3, 4, 9};
  const std::vector<double> y{1.2, -0.1, 0.4, 2.2};
  const ObservationSeries obs({"y"}, t, {{y[0]}, {y[1]}, {y[2]}, {y[3]}});
  EXPECT_NEAR(kalman_log_marginal(s, obs), dense_log_marginal(s, t, y), 1e-12);
}

TEST(Kalman, RejectsInvalidSettings) {
  LinearGaussianSettings s;
  s.q = 0.0;
  const ObservationSeries obs({"y"}, {1}, {{0.0}});
  EXPECT_THROW((void)kalman_log_marginal(s, obs), PreconditionError);
  s.q = 1.0;
  s.r = std::nan("");
  EXPECT_THROW((void)kalman_log_marginal(s, obs), PreconditionError);
}

ModelFactory lg_factory() {
  return [] { return std::make_unique<LinearGaussianModel>(); };
}

TEST(LinearGaussian, DynamicsAndObservation) {
  LinearGaussianModel m;
  m.init({{"a", 0.5}, {"q", 1.0}}, 1);
  const double x0 = m.state();
  m.advance(3);
  EXPECT_EQ(m.time(), 3);
  EXPECT_NE(m.state(), x0);
  const std::vector<double> y{m.state()};
  EXPECT_NEAR(m.log_observe(y), -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(m.observe(y), std::exp(m.log_observe(y)), 1e-15);
  EXPECT_THROW(m.advance(2), PreconditionError);
  EXPECT_THROW(m.init({{"b", 1.0}}, 1), PreconditionError);
}

TEST(LinearGaussian, StateRoundTrip) {
  LinearGaussianModel m;
  m.init({{"a", 0.9}}, 5);
  auto copy = lg_factory()();
  copy->load(m.save());
  EXPECT_EQ(copy->summary(), m.summary());
  const auto verdict = verify_state_roundtrip(m, lg_factory(), 8, std::vector<double>{0.2}, 77);
  EXPECT_TRUE(verdict.ok) << verdict.divergence;
}

TEST(LinearGaussian, TruncatedStateIsRejected) {
  LinearGaussianModel m;
  m.init({{"a", 0.9}}, 5);
  Bytes state = m.save();
  state.resize(state.size() - 1);
  LinearGaussianModel other;
  EXPECT_THROW(other.load(state), DeserializationError);
  EXPECT_THROW(other.load(Bytes{}), DeserializationError);
}

TEST(LinearGaussian, IdenticalSeedsGiveIdenticalObservations) {
  LinearGaussianModel a;
  LinearGaussianModel b;
  a.init({{"a", 0.9}}, 11);
  b.init({{"a", 0.9}}, 11);
  for (ModelTime t = 1; t <= 5; ++t) {
    a.run(t, 100 + static_cast<std::uint64_t>(t));
    b.reseed(100 + static_cast<std::uint64_t>(t));
    b.advance(t);
    EXPECT_EQ(a.log_observe(std::vector<double>{0.3}), b.log_observe(std::vector<double>{0.3}));
  }
}

TEST(Synthesize, DeterministicAndShaped) {
  const auto schedule = regular_schedule(1, 2, 6);
  const auto a = synthesize(lg_factory(), {{"a", 0.9}}, schedule, 3);
  const auto b = synthesize(lg_factory(), {{"a", 0.9}}, schedule, 3);
  const auto c = synthesize(lg_factory(), {{"a", 0.9}}, schedule, 4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(a.size(), 6u);
  EXPECT_EQ(a.fields()[0], "y");
}

TEST(DelayedModel, SleepsPerAdvanceAndForwardsState) {
  using namespace std::chrono;
  DelayedModel m(lg_factory()(), milliseconds(5));
  m.init({{"a", 0.9}}, 1);
  const auto start = steady_clock::now();
  m.advance(1);
  m.advance(2);
  EXPECT_GE(steady_clock::now() - start, milliseconds(10));
  LinearGaussianModel plain;
  plain.load(m.save());
  EXPECT_EQ(plain.time(), 2);
}

}  // namespace
}  // namespace pmcmc
