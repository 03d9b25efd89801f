#pragma once

#include <cmath>
#include <cstdint>

namespace tubeflow {

// Counter-based splittable random stream: draws depend only on
// (seed, stream id, counter), so distinct streams are independent and any
// draw is bit-reproducible.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), key_(mix(stream ^ 0x8f1bbcdcbfa53e0bULL)), counter_(0) {}

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (++counter_);
    return mix(z ^ key_);
  }

  std::uint64_t counter() const { return counter_; }

  // Uniform in (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; always consumes exactly two uniforms.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925287 * u2);
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
  }

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace tubeflow
