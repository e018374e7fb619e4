#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string_view>

namespace levypot {

/// SplitMix64 finalizer; used to derive keys, never as a stream generator.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) { return mix64(a ^ mix64(b)); }

/// FNV-1a; stable across platforms, used to turn estimator names into stream tags.
constexpr std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t hash_double(std::uint64_t h, double x) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(x));
  std::memcpy(&bits, &x, sizeof(bits));
  return hash_combine(h, bits);
}

/// Identifies a family of independent substreams: (seed, tag). Path i of chunk j
/// draws from the Philox counter block (j, i, k) with k the draw index.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t tag = 0;

  StreamKey child(std::uint64_t sub) const { return {seed, hash_combine(tag, sub)}; }
  StreamKey child(std::string_view name) const { return child(hash_string(name)); }
};

/// Philox4x32-10 counter-based generator (Salmon et al.), 64-bit outputs.
class Philox {
 public:
  using result_type = std::uint64_t;

  Philox(StreamKey key, std::uint64_t chunk, std::uint64_t index) {
    const std::uint64_t k = hash_combine(key.seed, key.tag);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    // High counter word addresses the substream, low word counts blocks.
    const std::uint64_t hi = hash_combine(chunk, index);
    ctr_ = {0u, 0u, static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32)};
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    if (pos_ == 2) {
      refill();
      pos_ = 0;
    }
    const std::uint64_t v = (static_cast<std::uint64_t>(out_[2 * pos_ + 1]) << 32) | out_[2 * pos_];
    ++pos_;
    return v;
  }

 private:
  static void round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }

  void refill() {
    std::array<std::uint32_t, 4> c = ctr_;
    std::array<std::uint32_t, 2> k = key_;
    for (int r = 0; r < 10; ++r) {
      round(c, k);
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    out_ = c;
    if (++ctr_[0] == 0) ++ctr_[1];
  }

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> ctr_{};
  std::array<std::uint32_t, 4> out_{};
  int pos_ = 2;
};

/// One path's random source. Thin layer over Philox with the draws the
/// simulators need; std distributions handle normal and gamma variates.
class Rng {
 public:
  Rng(StreamKey key, std::uint64_t chunk, std::uint64_t index) : engine_(key, chunk, index) {}

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() { return normal_(engine_); }
  double exponential() { return -std::log(uniform()); }
  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }
  double beta(double a, double b) {
    const double x = gamma(a);
    return x / (x + gamma(b));
  }

  Philox& engine() { return engine_; }

 private:
  Philox engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace levypot
