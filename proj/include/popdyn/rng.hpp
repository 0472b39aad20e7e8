#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "popdyn/core.hpp"

namespace popdyn {

/// Names a deterministic generator. (algorithm, seed, stream) fully determines
/// the draw sequence on every platform; replicas use distinct streams and
/// never share generator state.
struct RngSpec {
  std::string algorithm = "xoshiro256++";
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Stream ids used by the simulators, one per purpose so that draw order is
/// independent of unrelated code paths.
namespace rng_stream {
inline constexpr std::uint64_t kGraph = 0;    // graph sampling + observer pick
inline constexpr std::uint64_t kInitial = 1;  // initial strategy assignment
inline constexpr std::uint64_t kEvents = 2;   // arrival clock + revision draws
inline constexpr std::uint64_t kChain = 3;    // stationary Monte Carlo
}  // namespace rng_stream

/// xoshiro256++ (Blackman/Vigna) with state derived by SplitMix64 from
/// (seed, stream). All distribution code lives here: the std:: distributions
/// are not bit-portable across standard library implementations.
class Rng {
 public:
  explicit Rng(const RngSpec& spec);
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01();

  /// Exponential with the given rate; returns +inf for rate 0.
  double exponential(double rate);

  /// Uniform integer in [0, n), unbiased (rejection).
  std::uint64_t uniform_below(std::uint64_t n);

  /// Index draw from a probability row (sums to ~1); inverse-CDF walk.
  std::size_t sample_discrete(const Vec& probs);

  /// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::uint32_t> sample_without_replacement(std::size_t k, std::size_t n);

 private:
  std::array<std::uint64_t, 4> s_;
};

}  // namespace popdyn
