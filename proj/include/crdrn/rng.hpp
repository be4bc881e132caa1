#pragma once

#include <cstdint>

namespace crdrn {

// All randomness in the simulator is counter-based: every draw is a pure
// function of (seed, stream tag, slot, node, ...) through the SplitMix64
// finalizer below. This is what makes runs replayable slot-by-slot and lets
// external verifiers (the replay subcommand, test oracles) recompute any
// draw without replaying the whole stream.

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t avalanche(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_mix(std::uint64_t h, std::uint64_t w) {
  return avalanche(h ^ (w + kGolden + (h << 6) + (h >> 2)));
}

constexpr std::uint64_t hash2(std::uint64_t a, std::uint64_t b) {
  return hash_mix(avalanche(a + kGolden), b);
}

constexpr std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return hash_mix(hash2(a, b), c);
}

constexpr std::uint64_t hash4(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                              std::uint64_t d) {
  return hash_mix(hash3(a, b, c), d);
}

constexpr std::uint64_t hash5(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                              std::uint64_t d, std::uint64_t e) {
  return hash_mix(hash4(a, b, c, d), e);
}

// 53-bit uniform in [0, 1).
constexpr double u01(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

// Stream tags keep independent random processes decorrelated under one seed.
namespace stream {
inline constexpr std::uint64_t kPrActivity = 0x01;
inline constexpr std::uint64_t kPrData = 0x02;
inline constexpr std::uint64_t kTune = 0x03;
inline constexpr std::uint64_t kPickup = 0x04;
inline constexpr std::uint64_t kInject = 0x05;
inline constexpr std::uint64_t kDeploy = 0x06;
inline constexpr std::uint64_t kReplication = 0x07;
inline constexpr std::uint64_t kHoldoff = 0x08;
inline constexpr std::uint64_t kCmrListen = 0x09;
inline constexpr std::uint64_t kMobility = 0x0A;
}  // namespace stream

// Sequential SplitMix64 stream for placement and other draw-in-order uses.
// No <random> distributions anywhere: their output is implementation-defined
// and would break byte-identical CSVs across platforms.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return avalanche(state_);
  }

  double next_double() { return u01(next_u64()); }

  // Uniform integer in [0, bound). Modulo bias is < bound / 2^64.
  std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

 private:
  std::uint64_t state_;
};

// Replication r of a run with master seed s simulates with derived seed
// replication_seed(s, r); sweeps share the same master seed so only the
// swept axis varies.
constexpr std::uint64_t replication_seed(std::uint64_t master, std::uint64_t rep) {
  return hash3(master, stream::kReplication, rep);
}

}  // namespace crdrn
