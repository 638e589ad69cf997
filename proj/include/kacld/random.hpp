#pragma once

// Seeded random streams.
//
// Every stochastic routine in the library draws from a caller-owned Stream.
// Parallel work is split into chunks, and chunk k of an experiment tagged
// `tag` under master seed `seed` always receives the stream
// derive_stream(seed, tag, k). Results therefore depend only on
// (seed, tag, chunk size), never on how many threads run the chunks.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace kacld {

namespace detail {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, 64 bit.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// xoshiro256++ (Blackman and Vigna), seeded through SplitMix64.
/// Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t state = seed;
    for (auto& w : s_) w = detail::splitmix64(state);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

class Stream {
 public:
  using engine_type = Xoshiro256pp;

  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform on the open interval (0,1), 53 bits of resolution.
  double uniform() {
    return (static_cast<double>(bits() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on {0, ..., k-1}. Multiply-shift; bias is below k / 2^64.
  std::uint64_t index(std::uint64_t k) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(bits()) * k) >> 64);
  }

  /// Fair sign, +1 or -1.
  double sign() { return (bits() >> 63) ? -1.0 : 1.0; }

  double exponential() { return -std::log(uniform()); }

  /// Uniform angle on [0, 2*pi).
  double angle() {
    return 2.0 * std::numbers::pi * static_cast<double>(bits() >> 11) *
           0x1.0p-53;
  }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
};

/// Seed for chunk `chunk` of the experiment `tag` under `master_seed`.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed,
                                    std::string_view tag,
                                    std::uint64_t chunk) noexcept {
  std::uint64_t state = master_seed ^ detail::fnv1a(tag);
  std::uint64_t a = detail::splitmix64(state);
  state = a ^ (chunk * 0xd1b54a32d192ed03ULL);
  return detail::splitmix64(state);
}

inline Stream derive_stream(std::uint64_t master_seed, std::string_view tag,
                            std::uint64_t chunk) {
  return Stream(derive_seed(master_seed, tag, chunk));
}

}  // namespace kacld
