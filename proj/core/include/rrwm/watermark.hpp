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
#include <iosfwd>
#include <string>
#include <vector>

#include "rrwm/device.hpp"

namespace rrwm {

inline constexpr std::uint32_t kDefaultNRep = 256;
inline constexpr std::uint32_t kDefaultWatermarkBits = 32;
inline constexpr std::uint64_t kDefaultImprintPairs = 10000;

// Fraction of the rated endurance an imprint may consume per address.
inline constexpr double kDefaultBudgetCap = 0.10;

// One watermark bit lives in n_rep consecutive addresses; averaging the
// per-address times over the range suppresses measurement noise.
struct BitRange {
  std::uint32_t bit = 0;
  std::uint64_t start = 0;
  std::uint32_t n_rep = kDefaultNRep;
};

// Placement of a whole watermark. Text form, one line per bit:
//   bit_index,start_address,n_rep
struct WatermarkLayout {
  std::vector<BitRange> ranges;

  std::uint32_t bit_count() const {
    return static_cast<std::uint32_t>(ranges.size());
  }

  // One range of n_rep consecutive addresses per bit, starting at `base`.
  static WatermarkLayout contiguous(std::uint32_t bits, std::uint64_t base,
                                    std::uint32_t n_rep = kDefaultNRep);

  // Throws on overlapping ranges, empty layout or out-of-bounds addresses.
  void validate(std::uint64_t cell_count) const;

  static WatermarkLayout parse(std::istream& in);
  static WatermarkLayout parse_file(const std::string& path);
  void write(std::ostream& out) const;
};

// Averaged timing of one address group at one stress level. The min/max
// fields keep the per-address extremes so sweep reports can show the full
// band, not just the group means.
struct GroupMeasurement {
  std::uint32_t group = 0;
  std::uint64_t stress_pairs = 0;  // completed pairs when measured
  double t_set_256_s = 0.0;        // mean over live cells
  double t_reset_256_s = 0.0;
  double set_min_s = 0.0;
  double set_max_s = 0.0;
  double reset_min_s = 0.0;
  double reset_max_s = 0.0;
  std::uint32_t measured_cells = 0;
  std::uint32_t failed_cells = 0;

  double mean_s(Channel ch) const {
    return ch == Channel::kSet ? t_set_256_s : t_reset_256_s;
  }
};

struct MeasurementSeries {
  std::vector<GroupMeasurement> records;
};

// Decision boundary between fresh and stressed averaged times.
struct Threshold {
  Channel channel = Channel::kSet;
  double value_s = 0.0;
  double margin_s = 0.0;  // half the fresh/stressed gap on calibration data
  double temp_c = kRefTempC;
};

// Scales a threshold calibrated at one temperature to another operating
// point, using the device's temperature coefficient.
Threshold compensate_threshold(const Threshold& thr, double to_temp_c,
                               const TimingModel& model);

struct CharacterizeOptions {
  std::uint64_t pairs = 0;         // total stress applied over the sweep
  std::uint64_t sample_every = 1;  // pairs between timed samples
  double temp_c = kRefTempC;
};

// Wear sweep over a fresh address range: initializes to all-1, then
// alternates all-0/all-1 buffered passes, pausing every `sample_every`
// pairs to time one set and one reset per address. Addresses are grouped
// in 256-address chunks; each sample appends one record per group, with
// stress_pairs read back from the cells (timed samples themselves consume
// one pair per address). Rejects ranges that are not factory-fresh.
MeasurementSeries characterize(Device& dev, std::uint64_t start,
                               std::uint64_t count,
                               const CharacterizeOptions& opts);

struct ImprintOptions {
  std::uint64_t pairs = kDefaultImprintPairs;  // N, per one-bit
  double temp_c = kRefTempC;
  double budget_cap = kDefaultBudgetCap;
};

struct ImprintReport {
  std::uint32_t bits = 0;
  std::uint32_t one_bits = 0;
  std::uint64_t pairs_per_one_bit = 0;
  std::uint64_t cell_pairs_applied = 0;  // summed over stressed cells
  double sim_elapsed_s = 0.0;            // busy-clock cost of the imprint
  double formula_all_bits_s = 0.0;       // pairs * bits * t_pair
  double formula_one_bits_s = 0.0;       // pairs * popcount * t_pair
};

// Irreversibly imprints `bits` (1 = stressed, 0 = fresh): initializes every
// range to all-1, then applies N set-reset pairs to the one-bit ranges
// only. Requires fresh target addresses and an N within the endurance
// budget cap.
ImprintReport imprint(Device& dev, const WatermarkLayout& layout,
                      const std::vector<std::uint8_t>& bits,
                      const ImprintOptions& opts);

// Times one set and one reset per address of every bit range and averages
// per range (one record per bit, in layout order). Costs exactly one
// set-reset pair per live address. Failed cells are excluded from the
// averages; a range with a failed majority throws ErrorKind::kUnreadable.
MeasurementSeries extract(Device& dev, const WatermarkLayout& layout,
                          double temp_c = kRefTempC);

// Midpoint rule: value halfway between the slowest fresh average and the
// fastest stressed average. Throws ErrorKind::kNonSeparable when the
// classes overlap.
Threshold calibrate_threshold(const MeasurementSeries& fresh,
                              const MeasurementSeries& stressed, Channel ch,
                              double temp_c = kRefTempC);

// bit = 1 iff the averaged time exceeds the threshold; an exact tie reads
// as fresh.
std::vector<std::uint8_t> decode(const MeasurementSeries& measurements,
                                 const Threshold& thr);

// Hex <-> bit-vector helpers; bit 0 is the most significant bit of the hex
// string.
std::vector<std::uint8_t> bits_from_hex(const std::string& hex);
std::string hex_from_bits(const std::vector<std::uint8_t>& bits);

// CSV with header group,stress_count,t_set_256_s,t_reset_256_s.
void write_measurements_csv(std::ostream& out, const MeasurementSeries& series);
MeasurementSeries read_measurements_csv(std::istream& in);

// Threshold files are key=value text.
void write_threshold(std::ostream& out, const Threshold& thr);
Threshold read_threshold(std::istream& in);

}  // namespace rrwm
