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
#include <vector>

#include "rrwm/watermark.hpp"

namespace rrwm {

// Pairwise distance d(b0, b1) = t(one-bit) - t(zero-bit) between averaged
// times. The watermark is readable on a channel iff every distance is
// positive.
struct SeparationPair {
  std::uint32_t zero_bit = 0;
  std::uint32_t one_bit = 0;
  double d_s = 0.0;
};

struct SeparationReport {
  Channel channel = Channel::kSet;
  std::uint64_t stress_pairs = 0;  // stress of the one-bit class
  std::vector<SeparationPair> pairs;
  double min_d_s = 0.0;
  bool separable = false;  // min_d > 0
  bool degenerate = false;  // all-zero or all-one pattern: nothing to compare
};

SeparationReport separation(const MeasurementSeries& measurements,
                            const std::vector<std::uint8_t>& bits, Channel ch);

// separation CSV: header i,j,d_seconds; one row per (zero-bit, one-bit).
void write_separation_csv(std::ostream& out, const SeparationReport& report);

struct ImprintEstimate {
  double total_s = 0.0;
  double rate_bit_per_min = 0.0;
};

// T = pairs * bits * t_pair, the buffered stressing cost of a whole
// watermark when every bit were stressed.
ImprintEstimate imprint_time_estimate(double pairs, double bits,
                                      double t_pair_s);

struct RetrievalEstimate {
  double total_s = 0.0;
  double rate_bits_per_s = 0.0;
};

// T = t_switch * bits * n_rep, the timed-write cost of reading every bit.
RetrievalEstimate retrieval_time_estimate(double t_switch_s, double bits,
                                          double n_rep);

// Fraction of the rated endurance an imprint consumes per stressed address.
double endurance_cost(double pairs, double rated_pairs);

// Re-extracts the watermark while the chip is held at verify_temp_c and
// reports the separation seen there. Baking leaves no permanent mark in
// this model; temperature acts on the measurement path only. The
// threshold variant classifies bits by temperature-compensated decode; the
// expected-bits variant classifies by the given pattern. verify_temp_c
// must stay inside the rated operating range.
SeparationReport bake_and_verify(Device& dev, const WatermarkLayout& layout,
                                 const Threshold& thr, double bake_temp_c,
                                 double verify_temp_c);

struct BakeReport {
  double bake_temp_c = 0.0;
  double verify_temp_c = 0.0;
  SeparationReport set_report;
  SeparationReport reset_report;
};

BakeReport bake_and_verify(Device& dev, const WatermarkLayout& layout,
                           const std::vector<std::uint8_t>& expected_bits,
                           double bake_temp_c, double verify_temp_c);

// Collapses a characterization series into one row per stress level:
//   stress,set_min,set_mean,set_max,reset_min,reset_mean,reset_max
// Means weight groups by measured cell count; min/max span the
// per-address extremes recorded in the series.
void stress_sweep_report(const MeasurementSeries& series, std::ostream& out);

}  // namespace rrwm
