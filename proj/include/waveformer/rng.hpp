#pragma once

#include <cstdint>
#include <string_view>

namespace wf {

/// Counter-based deterministic random stream.
///
/// The generator is a SplitMix64 finalizer applied to a per-stream key plus
/// a draw counter:
///
///   key     = mix(seed ^ 0x9E3779B97F4A7C15 * (stream + 1))
///   draw(i) = mix(key + i * 0x9E3779B97F4A7C15)
///
/// where mix() is the SplitMix64 avalanche function. Every draw is a pure
/// function of (seed, stream, i), so sequences are reproducible across
/// platforms and random-access (no hidden state beyond the counter).
/// Gaussians come from Box-Muller over consecutive uniform pairs.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t stream);

  uint64_t next_u64();
  /// Uniform in [0, 1), 53-bit resolution.
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (consumes two uniforms).
  double normal();
  /// Random access without touching the counter.
  uint64_t value_at(uint64_t i) const;

  uint64_t counter() const { return counter_; }
  void skip(uint64_t n) { counter_ += n; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

/// FNV-1a hash, used to derive stable per-name RNG stream ids.
uint64_t fnv1a64(const char* s);
uint64_t fnv1a64(const std::string_view s);

}  // namespace wf
