#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace rmt {

// splitmix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

// Address of one random stream. The generator key is
//   key = mix64(mix64(mix64(master_seed) ^ stream_id) ^ substream_id)
// and seeds a std::mt19937_64, so any (master, stream, substream) triple can be
// regenerated independently of every other triple.
struct SeededStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t substream_id = 0;

  constexpr std::uint64_t key() const noexcept {
    return mix64(mix64(mix64(master_seed) ^ stream_id) ^ substream_id);
  }

  constexpr SeededStream with_stream(std::uint64_t s) const noexcept { return {master_seed, s, substream_id}; }
  constexpr SeededStream with_substream(std::uint64_t s) const noexcept { return {master_seed, stream_id, s}; }

  // A new independent master seed for a named purpose (coefficients, pilots, ...).
  constexpr SeededStream fork(std::string_view label) const noexcept {
    return {mix64(master_seed ^ hash_label(label)), stream_id, substream_id};
  }
  constexpr SeededStream fork(std::uint64_t tag) const noexcept {
    return {mix64(master_seed ^ mix64(tag + 0x632BE59BD9B4E019ull)), stream_id, substream_id};
  }
};

// Uniform and normal variates with a fixed, portable construction: uniforms take
// the top 53 bits of a 64-bit draw and normals come from the Box-Muller pair
// transform (the standard library distributions are implementation-defined).
class RandomSource {
 public:
  explicit RandomSource(const SeededStream& s) : engine_(s.key()) {}
  explicit RandomSource(std::uint64_t key) : engine_(key) {}

  std::uint64_t bits() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rmt
