#include "pmcmc/random.hpp"

#include <cmath>
#include <numbers>

namespace pmcmc {

double Rng::normal() noexcept {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::poisson_inversion(double mean) noexcept {
  const double u = uniform();
  std::uint64_t k = 0;
  double pk = std::exp(-mean);
  double cdf = pk;
  while (u >= cdf && k < 1000) {
    ++k;
    pk *= mean / static_cast<double>(k);
    cdf += pk;
  }
  return k;
}

std::uint64_t Rng::poisson(double mean) noexcept {
  constexpr double kChunk = 30.0;
  std::uint64_t k = 0;
  while (mean > kChunk) {
    k += poisson_inversion(kChunk);
    mean -= kChunk;
  }
  return k + poisson_inversion(mean > 0.0 ? mean : 0.0);
}

}  // namespace pmcmc
