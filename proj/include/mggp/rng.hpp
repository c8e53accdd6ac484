#pragma once

#include <array>
#include <concepts>
#include <cstdint>

namespace mggp {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t splitmix64_next(std::uint64_t& x) noexcept {
  x += kGolden;
  return mix64(x);
}

inline constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Seeded random stream with fixed, platform-independent output (xoshiro256**
/// state seeded via splitmix64). The engine deliberately avoids the standard
/// <random> distributions, whose output is implementation-defined; every draw
/// here is reproducible bit-for-bit on any conforming compiler, which is what
/// makes whole runs replayable from (config, dataset, seed).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& word : state_) word = detail::splitmix64_next(x);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  /// Independent stream addressed by (seed, stream, slot). Used to give every
  /// population slot its own stream so parallel and sequential execution draw
  /// identical numbers.
  static Rng derive(std::uint64_t seed, std::uint64_t stream,
                    std::uint64_t slot) noexcept {
    std::uint64_t h = seed;
    h = detail::mix64(h + detail::kGolden * (stream + 1));
    h = detail::mix64(h ^ (slot + 0x2545f4914f6cdd1dull));
    return Rng(h);
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). bound must be positive. Unbiased via
  /// rejection of the residue range.
  int uniform_int(int bound) noexcept {
    const auto b = static_cast<std::uint64_t>(bound);
    const std::uint64_t reject_below = (0 - b) % b;  // 2^64 mod b
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= reject_below) return static_cast<int>(r % b);
    }
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::array<std::uint64_t, 4> state_{};
};

/// Anything the stochastic operators draw from. Tests substitute scripted
/// sources to pin down exact scenarios.
template <class R>
concept RandomSource = requires(R r, int bound, double p) {
  { r.next_u64() } -> std::convertible_to<std::uint64_t>;
  { r.uniform() } -> std::convertible_to<double>;
  { r.uniform_int(bound) } -> std::convertible_to<int>;
  { r.bernoulli(p) } -> std::convertible_to<bool>;
};

static_assert(RandomSource<Rng>);

}  // namespace mggp
