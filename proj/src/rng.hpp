#pragma once

#include <cstdint>
#include <random>

namespace scanmix {

// SplitMix64 finalizer; used to derive independent engine seeds from (seed, stream).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/**
 * Reproducible uniform-variate stream identified by (seed, stream_id).
 *
 * The engine is std::mt19937_64 (fully specified by the standard); the
 * conversions to doubles and bounded integers are done here rather than with
 * <random> distributions, whose output is implementation-defined. The same
 * (seed, stream_id) therefore yields the same sequence on every platform.
 */
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id), engine_(derive(seed, stream_id)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound), bound > 0. Lemire's nearly-divisionless method.
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = engine_();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Child stream for replica `index` of this stream; independent of scheduling.
  RngStream substream(std::uint64_t index) const {
    return RngStream(seed_, mix64(stream_id_ ^ mix64(index + 0x632be59bd9b4e019ULL)));
  }

 private:
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream_id) {
    return mix64(mix64(seed) ^ mix64(stream_id + 0x2545f4914f6cdd1dULL));
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace scanmix
