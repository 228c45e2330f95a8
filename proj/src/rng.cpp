#include "waveformer/rng.hpp"

#include <cmath>
#include <string_view>

namespace wf {

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline uint64_t mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace

RngStream::RngStream(uint64_t seed, uint64_t stream)
    : key_(mix(seed ^ (kGolden * (stream + 1)))) {}

uint64_t RngStream::value_at(uint64_t i) const { return mix(key_ + i * kGolden); }

uint64_t RngStream::next_u64() { return value_at(counter_++); }

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
  // u1 in (0, 1] so the log is always finite.
  double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

uint64_t fnv1a64(const std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a64(const char* s) { return fnv1a64(std::string_view(s)); }

}  // namespace wf
