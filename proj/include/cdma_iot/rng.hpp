#ifndef CDMA_IOT_RNG_HPP_
#define CDMA_IOT_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cdma_iot {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Counter-based substream seed: a pure function of the master seed and the
/// coordinates, so trials can run in any order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = mix64(master);
  for (auto c : coords) h = mix64(h ^ mix64(c + 0x632BE59BD9B4E019ull));
  return h;
}

/// Stream tags keeping the substreams of one trial independent.
enum class StreamTag : std::uint64_t { kContent = 1, kNoise = 2, kInterferer = 3, kCalibration = 4 };

constexpr std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t a,
                                    std::uint64_t b = 0) {
  return derive_seed(master, {static_cast<std::uint64_t>(tag), a, b});
}

}  // namespace cdma_iot

#endif  // CDMA_IOT_RNG_HPP_
