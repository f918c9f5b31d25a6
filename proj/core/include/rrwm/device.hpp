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
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "rrwm/cell_model.hpp"
#include "rrwm/errors.hpp"
#include "rrwm/rng.hpp"

namespace rrwm {

// Size of the device's internal write buffer: one buffered command covers up
// to this many consecutive addresses at a fixed service time.
inline constexpr std::uint64_t kWriteBufferBytes = 256;

// Default address space: 8Mb, byte-addressable.
inline constexpr std::uint64_t kDefaultCellCount = 1u << 20;

// Binary image layout (little-endian):
//   "RRWM"                       4 bytes
//   version (u32, = 1)           4 bytes
//   cell_count (u64)             8 bytes
//   TimingModel, 14 x f64      112 bytes   (declaration order)
//   rng state (u64)              8 bytes
//   per cell: wear_sixteenths (u32), variation (f64),
//             endurance_limit (u32), value (u8)   -> 17 bytes each
// Failure is not stored; it is re-derived from wear >= endurance.
inline constexpr std::uint32_t kImageVersion = 1;
inline constexpr std::size_t kImageHeaderBytes = 136;
inline constexpr std::size_t kImageCellBytes = 17;

struct WriteResult {
  double elapsed_s = 0.0;
  bool failed = false;  // write bounced off a worn-out cell
};

struct ReadResult {
  std::uint8_t value = 0;
  bool failed = false;
};

// One simulated chip: cell array, 256-byte write buffer, busy-time
// accounting and a persistent noise stream. A device instance is
// single-writer; distinct instances are fully independent.
class Device {
 public:
  static Device create(std::uint64_t cell_count, std::uint64_t seed,
                       const TimingModel& model);
  static Device create(std::uint64_t cell_count, std::uint64_t seed) {
    return create(cell_count, seed, TimingModel::calibrated_defaults());
  }

  static Device load(std::istream& in);
  static Device load(const std::filesystem::path& path);
  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

  std::uint64_t cell_count() const { return cells_.size(); }
  const TimingModel& model() const { return model_; }
  const CellState& cell(std::uint64_t addr) const;

  // Cumulative simulated device-busy time. Every operation's return value
  // is also accrued here, and nothing else advances it.
  double elapsed_s() const { return busy_s_; }

  // Single-address write. The latency reflects the transition actually
  // performed: set time when bits only fall, reset time when they only
  // rise, the larger of the two when a mixed byte moves bits both ways,
  // and a fixed verify-only time when the value is unchanged. A write to a
  // failed cell changes nothing and costs the timeout.
  WriteResult write_byte(std::uint64_t addr, std::uint8_t value,
                         double temp_c);

  // Buffered write of up to 256 bytes: applies every transition but costs
  // the fixed buffered service time, independent of content. Failed cells
  // in the range are skipped. Empty data is free.
  double write_buffered(std::uint64_t start, std::span<const std::uint8_t> data,
                        double temp_c);

  // Buffered fill of an arbitrary range (ceil(len/256) commands).
  double fill_buffered(std::uint64_t start, std::uint64_t len,
                       std::uint8_t value, double temp_c);

  // Bulk equivalent of `pairs` alternating all-0 / all-1 buffered passes
  // over the range. Cells must hold all-1 on entry (the initialized state);
  // cells that hit their endurance limit mid-way stop wearing exactly where
  // the write-by-write sequence would have left them. Costs
  // pairs * 2 * ceil(len/256) buffered commands.
  double stress_range(std::uint64_t start, std::uint64_t len,
                      std::uint64_t pairs);

  // Non-destructive, untimed.
  ReadResult read_byte(std::uint64_t addr) const;

 private:
  Device() = default;
  CellState& cell_at(std::uint64_t addr);
  void check_range(std::uint64_t start, std::uint64_t len) const;

  TimingModel model_;
  std::vector<CellState> cells_;
  double busy_s_ = 0.0;
  NoiseStream rng_;
};

}  // namespace rrwm
