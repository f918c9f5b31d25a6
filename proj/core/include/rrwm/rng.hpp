// Copyright 2026 The rrwm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

namespace rrwm {

// Counter-style pseudo random primitives. Everything in the simulator that
// draws randomness goes through these so that a device image plus a 64-bit
// state word reproduces bit-identical behavior.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xFF51AFD7ED558CCDull;
  x ^= x >> 33;
  x *= 0xC4CEB9FE1A85EC53ull;
  x ^= x >> 33;
  return x;
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (0x9E3779B97F4A7C15ull + b + (a << 6) + (a >> 2)));
}

// Top 53 bits -> [0, 1).
inline double unit_double(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Symmetric unit: [-1, 1).
inline double sym_unit_double(std::uint64_t h) {
  return 2.0 * unit_double(h) - 1.0;
}

// Sequential stream of doubles. The state word is part of the persisted
// device image, so reloading an image resumes the stream mid-sequence.
struct NoiseStream {
  std::uint64_t state = 0;

  double next_unit() { return unit_double(splitmix64_next(state)); }

  // Irwin-Hall sum of 12 uniforms, shifted: mean 0, stddev 1, bounded to
  // +/-6. Free of libm calls, so the stream is reproducible across builds.
  double next_gaussian() {
    double sum = 0.0;
    for (int i = 0; i < 12; ++i) sum += next_unit();
    return sum - 6.0;
  }
};

}  // namespace rrwm
