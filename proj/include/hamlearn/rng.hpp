#pragma once

#include <cstdint>

namespace hamlearn {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator: the n-th draw of a stream is a pure function of
// (key, n), so substreams handed to worker threads never interact.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept : key_(splitmix64(seed)) {}

  // Independent child stream, e.g. one per trajectory.
  constexpr CounterRng split(std::uint64_t stream) const noexcept {
    CounterRng child(0);
    child.key_ = splitmix64(key_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    return child;
  }

  constexpr std::uint64_t next() noexcept {
    return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
  }

  // Uniform on [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stream identifiers used by the data pipeline.
namespace streams {
inline constexpr std::uint64_t kInitialStates = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kEvaluation = 3;
}  // namespace streams

}  // namespace hamlearn
