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

#include "rrwm/errors.hpp"
#include "rrwm/rng.hpp"

namespace rrwm {

enum class Channel { kSet, kReset };

inline const char* channel_name(Channel ch) {
  return ch == Channel::kSet ? "set" : "reset";
}

// Reference operating temperature. The temperature coefficient is applied
// relative to this point.
inline constexpr double kRefTempC = 25.0;

// Rated operating range of the modeled part.
inline constexpr double kMinOperatingTempC = -25.0;
inline constexpr double kMaxOperatingTempC = 85.0;

// One byte-addressable cell. Wear is tracked in sixteenths of a set-reset
// pair: a full pair flips all 8 bits down and back up, i.e. 16 bit flips.
// Writes of mixed byte values therefore stress the cell by exactly the
// number of bits they flip. Wear never decreases; a cell whose completed
// pair count reaches its endurance limit stops accepting writes for good.
struct CellState {
  std::uint32_t wear_sixteenths = 0;
  std::uint32_t endurance_limit = 0;  // set-reset pairs
  double variation = 1.0;             // per-cell manufacturing factor
  std::uint8_t value = 0xFF;          // stored byte; all-1 = HRS everywhere

  // Completed set-reset pairs.
  std::uint32_t stress_pairs() const { return wear_sixteenths / 16u; }

  bool failed() const { return stress_pairs() >= endurance_limit; }
};

// Applies one full set-reset pair. Returns false (and leaves the cell
// untouched) when the cell has already failed.
bool apply_stress_pair(CellState& cell);

// Parametric set/reset latency as a function of accumulated stress and
// temperature:
//
//   t(n) = t_fresh * (1 + A * g(n / n_half)) * variation
//         * (1 + kappa * (T - 25C)) * (1 + sigma_m * z)
//
// with g(x) = x^p / (1 + x^p). The growth term is strictly increasing and
// saturates at A, so a cell close to wear-out writes a few times slower
// than a fresh one instead of diverging. z is a standard gaussian drawn per
// timed write.
//
// Default calibration targets, under the default +/-10% cell spread:
//   - the slowest stressed cell overtakes the fastest fresh cell at
//     ~11.5K pairs (set) and ~14.5K pairs (reset), so a full sweep first
//     reports separation at the 12K / 15K sample points;
//   - population mean set time after 10K pairs is ~250us;
//   - 256-address averages separate cleanly at 10K pairs on the set
//     channel and 15K on the reset channel, while still overlapping at
//     5K (set) and 10K (reset) because of the block-correlated share of
//     the manufacturing spread.
struct TimingModel {
  double t_set_fresh_s = 0.0;
  double t_reset_fresh_s = 0.0;
  double set_growth_amplitude = 0.0;    // A for the set channel
  double reset_growth_amplitude = 0.0;  // A for the reset channel
  double growth_exponent = 0.0;         // p
  double growth_half_pairs = 0.0;       // stress count of half saturation
  double temp_coeff_per_c = 0.0;        // kappa
  double meas_noise_sigma = 0.0;        // relative noise per timed write
  double cell_spread = 0.0;             // total half-width of variation
  double block_spread = 0.0;            // 256-address-correlated share
  double rated_endurance_pairs = 0.0;   // accounting basis for budgets
  double buffered_write_s = 0.0;        // fixed cost of one buffered command
  double verify_only_s = 0.0;           // write of the already-stored value
  double timeout_s = 0.0;               // write attempt on a failed cell

  static TimingModel calibrated_defaults();

  // Growth factor A * g(n / n_half) for a given completed pair count.
  double wear_growth(double pairs, Channel ch) const;

  // Latency of one timed write. Throws ErrorKind::kCellFailed for a failed
  // cell. Consumes noise from `rng` only when meas_noise_sigma is nonzero;
  // pass nullptr for the noise-free closed form.
  double time_s(const CellState& cell, Channel ch, double temp_c,
                NoiseStream* rng) const;

  double set_time_s(const CellState& cell, double temp_c,
                    NoiseStream* rng) const {
    return time_s(cell, Channel::kSet, temp_c, rng);
  }
  double reset_time_s(const CellState& cell, double temp_c,
                      NoiseStream* rng) const {
    return time_s(cell, Channel::kReset, temp_c, rng);
  }

  // Multiplier applied to every latency at temperature T.
  double temp_factor(double temp_c) const {
    return 1.0 + temp_coeff_per_c * (temp_c - kRefTempC);
  }
};

// Crossing targets the default amplitudes are solved from (pairs at which
// the worst-case stressed cell first exceeds the best-case fresh cell).
inline constexpr double kSetCrossingPairs = 11500.0;
inline constexpr double kResetCrossingPairs = 14500.0;

// Endurance limits are drawn per cell from a gaussian with mean
// kEnduranceMeanFactor * rated and sigma kEnduranceSigmaFactor * rated,
// clamped below at the rated count: parts routinely outlive their rating,
// never undershoot it in this model.
inline constexpr double kEnduranceMeanFactor = 2.0;
inline constexpr double kEnduranceSigmaFactor = 0.2;

}  // namespace rrwm
