#pragma once

#include <cmath>
#include <cstdint>

#include "gannoise/tensor.hpp"

namespace gannoise {

// Counter-based random stream. Output i is mix(key + i * golden), where the
// key is derived from (seed, stream id). Any (seed, stream) pair gives an
// independent reproducible sequence, so parallel runs never share state.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) : key_(derive_key(seed, stream)) {}

  std::uint64_t next_u64() { return mix(key_ + (counter_++) * kGolden); }

  /// Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log argument.
  double next_unit_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform in [-1, 1).
  double uniform_pm1() { return 2.0 * next_unit() - 1.0; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Standard normal via Box-Muller. Always consumes exactly two raw draws,
  /// which keeps stream positions aligned across code paths.
  double normal() {
    double u1 = next_unit_open();
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  Tensor normal_tensor(Shape shape) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data()) v = normal();
    return t;
  }

  Tensor normal_tensor(Shape shape, double mean, double stddev) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data()) v = normal(mean, stddev);
    return t;
  }

  Tensor uniform_tensor(Shape shape, double lo, double hi) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data()) v = uniform(lo, hi);
    return t;
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr double kPi = 3.14159265358979323846;

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix(seed ^ mix(stream * kGolden + 0x123456789ABCDEFULL));
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stream ids used by training runs. Fixed so that every consumer of a run
// seed draws from its own lane.
namespace streams {
inline constexpr std::uint64_t kGeneratorInit = 0;
inline constexpr std::uint64_t kDiscriminatorInit = 1;
inline constexpr std::uint64_t kData = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kInterp = 4;
inline constexpr std::uint64_t kEvalNoise = 5;
inline constexpr std::uint64_t kEvalData = 6;
inline constexpr std::uint64_t kBatchIndex = 7;
}  // namespace streams

}  // namespace gannoise
