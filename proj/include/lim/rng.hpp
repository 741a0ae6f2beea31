#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace lim {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the sub-generator for item `ordinal` of stream `stream`. Work items
/// draw only from their own sub-generator, so output does not depend on how
/// items are scheduled across workers.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream,
                                    std::uint64_t ordinal) {
  return splitmix64(splitmix64(root ^ splitmix64(stream)) + ordinal);
}

/// Portable random source. The engine is fully specified by the standard;
/// the distributions are implemented here because libstdc++/libc++ disagree on
/// <random> distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  Rng(std::uint64_t root, std::uint64_t stream, std::uint64_t ordinal)
      : Rng(derive_seed(root, stream, ordinal)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform in [0, n). Rejection sampling, no modulo bias. n must be > 0.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Stream tags keep sub-generators of different pipelines apart.
namespace streams {
inline constexpr std::uint64_t kMasking = 1;
inline constexpr std::uint64_t kPairs = 2;
inline constexpr std::uint64_t kSimilarity = 3;
inline constexpr std::uint64_t kSplit = 4;
inline constexpr std::uint64_t kSynthetic = 5;
inline constexpr std::uint64_t kInit = 6;
inline constexpr std::uint64_t kTrainBatch = 7;
inline constexpr std::uint64_t kEval = 8;
}  // namespace streams

}  // namespace lim
