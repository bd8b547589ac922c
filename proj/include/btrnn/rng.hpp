#pragma once

#include <cstdint>

namespace btrnn {

// Counter-based generator. Every output is a pure function of
// (seed, stream, counter), so replaying needs only the stored triple and a
// consumer that assigns counters in row-major order draws the same matrix no
// matter how its loops are scheduled. Identical across platforms: integer
// arithmetic only.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t counter = 0;

  RngStream() = default;
  RngStream(std::uint64_t seed_, std::uint64_t stream_, std::uint64_t counter_ = 0)
      : seed(seed_), stream(stream_), counter(counter_) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Output at an absolute counter position; does not advance the stream.
  std::uint64_t value_at(std::uint64_t at) const {
    std::uint64_t z = (at + 1) * 0x9E3779B97F4A7C15ull;
    z = mix64(z ^ (seed + 0xBF58476D1CE4E5B9ull));
    z = mix64(z + mix64(stream ^ 0x94D049BB133111EBull));
    return z;
  }

  // Uniform in [0,1) with 53 significant bits.
  double uniform_at(std::uint64_t at) const {
    return static_cast<double>(value_at(at) >> 11) * 0x1.0p-53;
  }

  std::uint64_t next_u64() { return value_at(counter++); }
  double next_uniform() { return uniform_at(counter++); }

  void advance(std::uint64_t n) { counter += n; }

  // Derived stream for an independent purpose; shares the seed.
  RngStream fork(std::uint64_t substream) const {
    return RngStream(seed, mix64(stream ^ (substream + 0x9E3779B97F4A7C15ull)), 0);
  }
};

}  // namespace btrnn
