#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace pmcmc {

/// Position of a random stream in the seed hierarchy.
///
/// The engine never draws from a global generator. Every stream (particle
/// initialisation, particle dynamics after a resampling step, master
/// resampling, MCMC proposals) is keyed by where it sits in the run, so
/// results depend only on the key and never on worker count or scheduling.
struct SeedKey {
  std::uint64_t chain_index = 0;
  std::uint64_t sample_index = 0;
  std::uint64_t observation_index = 0;
  std::uint64_t lineage_id = 0;
  /// Stream discriminator within a (chain, sample, observation, lineage)
  /// slot; see `stream` below for the values the engine uses.
  std::uint64_t replica_index = 0;

  friend bool operator==(const SeedKey&, const SeedKey&) = default;
};

namespace stream {
inline constexpr std::uint64_t kParticle = 0;
inline constexpr std::uint64_t kResample = 1;
inline constexpr std::uint64_t kProposal = 2;
inline constexpr std::uint64_t kSynthesis = 3;
}  // namespace stream

/// SplitMix64 step: adds the golden-ratio increment, then applies the
/// Stafford variant-13 finaliser. A bijection on 64-bit words.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Absorbs the five key fields in declaration order:
/// h0 = 0x6A09E667F3BCC909, h_{k+1} = splitmix64(h_k xor field_k).
/// Pure integer arithmetic, so the value is identical on every platform.
[[nodiscard]] constexpr std::uint64_t derive_seed(const SeedKey& key) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t field : {key.chain_index, key.sample_index, key.observation_index,
                              key.lineage_id, key.replica_index}) {
    h = splitmix64(h ^ field);
  }
  return h;
}

/// xoshiro256** generator with fully specified transforms.
///
/// The standard library distributions are implementation-defined, which
/// would make particle trajectories differ between toolchains; every draw
/// used by the engine goes through the members below instead.
class Rng {
 public:
  using result_type = std::uint64_t;
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed = 0) noexcept { reseed(seed); }

  /// State words are successive SplitMix64 outputs starting from `seed`.
  void reseed(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      word = splitmix64(x);
      x += 0x9E3779B97F4A7C15ULL;
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next(); }

  result_type next() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Top 53 bits scaled to [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Box-Muller, cosine branch only (no cached second variate, so the
  /// generator state alone determines the stream).
  double normal() noexcept;

  /// Inversion by sequential search; means above 30 are split into chunks
  /// of 30 plus a remainder (sum of independent Poissons). Always consumes
  /// at least one uniform, even for mean 0.
  std::uint64_t poisson(double mean) noexcept;

  bool bernoulli(double probability) noexcept { return uniform() < probability; }

  [[nodiscard]] const State& state() const noexcept { return state_; }
  void set_state(const State& state) noexcept { state_ = state; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t poisson_inversion(double mean) noexcept;

  State state_{};
};

}  // namespace pmcmc
