// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace vptdn {

/// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine_key(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (mix64(b) + 0x632BE59BD9B4E019ull + (a << 6) + (a >> 2)));
}

/// Random stream identity.
enum class Purpose : std::uint64_t {
  kCameraJitter = 1,
  kPath = 2,
  kResample = 3,
};

/// Key for one (frame, pixel, sample, purpose) stream.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t frame, std::uint64_t pixel,
                                   std::uint64_t sample, Purpose purpose) {
  std::uint64_t k = combine_key(seed, frame);
  k = combine_key(k, pixel);
  k = combine_key(k, sample);
  return combine_key(k, static_cast<std::uint64_t>(purpose));
}

/// Counter-based uniform generator: the n-th draw is a pure function of
/// (key, n), so streams carry no shared state.
class Sampler {
 public:
  explicit constexpr Sampler(std::uint64_t key) : key_(key) {}

  /// Uniform double in [0, 1).
  double uniform() {
    const std::uint64_t bits = mix64(key_ ^ mix64(counter_++));
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Per-frame seed derived from a sequence seed.
constexpr std::uint64_t frame_seed(std::uint64_t sequence_seed, std::uint64_t frame) {
  return combine_key(sequence_seed, frame);
}

}  // namespace vptdn
