#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace ausm {

/// 64-bit FNV-1a over a byte string.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Stateless counter-based stream: value i of stream (seed, key) depends only
/// on those three inputs.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view key) noexcept
      : base_(splitmix64(seed ^ splitmix64(fnv1a64(key)))) {}

  std::uint64_t bits(std::uint64_t counter) const noexcept {
    return splitmix64(base_ + splitmix64(counter));
  }

  /// Uniform in [0, 1).
  double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t base_;
};

/// Sequential seeded generator. Distribution code is written out here rather
/// than taken from <random> so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Textual engine state, restorable with load().
  std::string save() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }
  void load(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
  }

  friend bool operator==(const Rng&, const Rng&) = default;

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ausm
