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

#include "rrwm/device.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace rrwm {

namespace {

constexpr std::uint64_t kBlockTag = 0x626C6F636B737072ull;   // block spread
constexpr std::uint64_t kCellTag = 0x63656C6C73707264ull;    // cell spread
constexpr std::uint64_t kEnduranceTag = 0x656E647572616E63ull;
constexpr std::uint64_t kNoiseTag = 0x6D6561736E6F6973ull;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  double f64() { return std::bit_cast<double>(bytes(8)); }
  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)); }

  void raw(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(ErrorKind::kFormat, "truncated device image");
    }
  }

 private:
  std::uint64_t bytes(int n) {
    unsigned char buf[8];
    raw(reinterpret_cast<char*>(buf), static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
  }

  std::istream& in_;
};

}  // namespace

Device Device::create(std::uint64_t cell_count, std::uint64_t seed,
                      const TimingModel& model) {
  if (cell_count == 0) {
    throw Error(ErrorKind::kState, "device must have at least one cell");
  }
  Device dev;
  dev.model_ = model;
  dev.cells_.resize(cell_count);
  dev.rng_.state = hash_combine(seed, kNoiseTag);

  const double cell_component = model.cell_spread - model.block_spread;
  const double rated = model.rated_endurance_pairs;
  const std::uint64_t block_seed = hash_combine(seed, kBlockTag);
  const std::uint64_t cell_seed = hash_combine(seed, kCellTag);
  const std::uint64_t endurance_seed = hash_combine(seed, kEnduranceTag);

  for (std::uint64_t addr = 0; addr < cell_count; ++addr) {
    CellState& c = dev.cells_[addr];
    const std::uint64_t block = addr / kWriteBufferBytes;
    const double u_block =
        model.block_spread * sym_unit_double(hash_combine(block_seed, block));
    const double u_cell =
        cell_component * sym_unit_double(hash_combine(cell_seed, addr));
    c.variation = 1.0 + u_block + u_cell;

    NoiseStream es{hash_combine(endurance_seed, addr)};
    const double limit = kEnduranceMeanFactor * rated +
                         kEnduranceSigmaFactor * rated * es.next_gaussian();
    c.endurance_limit =
        static_cast<std::uint32_t>(std::llround(std::max(limit, rated)));
    c.value = 0xFF;  // fresh chips ship in the all-1 (HRS) state
  }
  return dev;
}

CellState& Device::cell_at(std::uint64_t addr) {
  if (addr >= cells_.size()) {
    throw Error(ErrorKind::kBounds,
                "address " + std::to_string(addr) + " outside device of " +
                    std::to_string(cells_.size()) + " cells");
  }
  return cells_[addr];
}

const CellState& Device::cell(std::uint64_t addr) const {
  if (addr >= cells_.size()) {
    throw Error(ErrorKind::kBounds,
                "address " + std::to_string(addr) + " outside device of " +
                    std::to_string(cells_.size()) + " cells");
  }
  return cells_[addr];
}

void Device::check_range(std::uint64_t start, std::uint64_t len) const {
  if (start > cells_.size() || len > cells_.size() - start) {
    throw Error(ErrorKind::kBounds,
                "range [" + std::to_string(start) + ", +" +
                    std::to_string(len) + ") overflows device of " +
                    std::to_string(cells_.size()) + " cells");
  }
}

WriteResult Device::write_byte(std::uint64_t addr, std::uint8_t value,
                               double temp_c) {
  CellState& c = cell_at(addr);
  if (c.failed()) {
    busy_s_ += model_.timeout_s;
    return {model_.timeout_s, true};
  }
  const std::uint8_t old = c.value;
  const int falling = std::popcount(std::uint8_t(old & ~value));  // 1 -> 0
  const int rising = std::popcount(std::uint8_t(~old & value));   // 0 -> 1

  double t;
  if (falling == 0 && rising == 0) {
    t = model_.verify_only_s;
  } else {
    double t_set = 0.0, t_reset = 0.0;
    if (falling > 0) t_set = model_.set_time_s(c, temp_c, &rng_);
    if (rising > 0) t_reset = model_.reset_time_s(c, temp_c, &rng_);
    t = std::max(t_set, t_reset);
    c.wear_sixteenths += static_cast<std::uint32_t>(falling + rising);
    c.value = value;
  }
  busy_s_ += t;
  return {t, false};
}

double Device::write_buffered(std::uint64_t start,
                              std::span<const std::uint8_t> data,
                              double /*temp_c*/) {
  if (data.empty()) return 0.0;
  if (data.size() > kWriteBufferBytes) {
    throw Error(ErrorKind::kBounds,
                "buffered write of " + std::to_string(data.size()) +
                    " bytes exceeds the 256-byte write buffer");
  }
  check_range(start, data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CellState& c = cells_[start + i];
    if (c.failed()) continue;  // verify gives up silently on dead cells
    const std::uint8_t value = data[i];
    const int flips = std::popcount(std::uint8_t(c.value ^ value));
    if (flips == 0) continue;
    c.wear_sixteenths += static_cast<std::uint32_t>(flips);
    c.value = value;
  }
  busy_s_ += model_.buffered_write_s;
  return model_.buffered_write_s;
}

double Device::fill_buffered(std::uint64_t start, std::uint64_t len,
                             std::uint8_t value, double temp_c) {
  check_range(start, len);
  std::vector<std::uint8_t> chunk(
      static_cast<std::size_t>(std::min(len, kWriteBufferBytes)), value);
  double total = 0.0;
  for (std::uint64_t off = 0; off < len; off += kWriteBufferBytes) {
    const std::uint64_t n = std::min(kWriteBufferBytes, len - off);
    total += write_buffered(start + off,
                            std::span<const std::uint8_t>(chunk.data(), n),
                            temp_c);
  }
  return total;
}

double Device::stress_range(std::uint64_t start, std::uint64_t len,
                            std::uint64_t pairs) {
  check_range(start, len);
  if (len == 0 || pairs == 0) return 0.0;

  for (std::uint64_t i = 0; i < len; ++i) {
    CellState& c = cells_[start + i];
    if (c.failed()) continue;
    if (c.value != 0xFF) {
      throw Error(ErrorKind::kState,
                  "stress_range requires the all-1 initialized state at "
                  "address " + std::to_string(start + i));
    }
    const std::uint64_t head_room = c.endurance_limit - c.stress_pairs();
    if (pairs < head_room) {
      c.wear_sixteenths += static_cast<std::uint32_t>(16 * pairs);
      continue;
    }
    // The cell dies during this burst. Replay the half-write in which the
    // verify loop stops: the closing all-1 write still lands when fewer
    // than 8 residual sixteenths separate the cell from its limit.
    const std::uint32_t r = c.wear_sixteenths % 16u;
    c.wear_sixteenths = 16u * c.endurance_limit + r;
    if (r >= 8u) {
      c.wear_sixteenths -= 8u;
      c.value = 0x00;
    }
  }

  const std::uint64_t chunks = (len + kWriteBufferBytes - 1) / kWriteBufferBytes;
  const double t =
      static_cast<double>(pairs) * 2.0 * static_cast<double>(chunks) *
      model_.buffered_write_s;
  busy_s_ += t;
  return t;
}

ReadResult Device::read_byte(std::uint64_t addr) const {
  const CellState& c = cell(addr);
  return {c.value, c.failed()};
}

void Device::save(std::ostream& out) const {
  std::string buf;
  buf.reserve(kImageHeaderBytes + cells_.size() * kImageCellBytes);
  buf.append("RRWM", 4);
  put_u32(buf, kImageVersion);
  put_u64(buf, cells_.size());
  put_f64(buf, model_.t_set_fresh_s);
  put_f64(buf, model_.t_reset_fresh_s);
  put_f64(buf, model_.set_growth_amplitude);
  put_f64(buf, model_.reset_growth_amplitude);
  put_f64(buf, model_.growth_exponent);
  put_f64(buf, model_.growth_half_pairs);
  put_f64(buf, model_.temp_coeff_per_c);
  put_f64(buf, model_.meas_noise_sigma);
  put_f64(buf, model_.cell_spread);
  put_f64(buf, model_.block_spread);
  put_f64(buf, model_.rated_endurance_pairs);
  put_f64(buf, model_.buffered_write_s);
  put_f64(buf, model_.verify_only_s);
  put_f64(buf, model_.timeout_s);
  put_u64(buf, rng_.state);
  for (const CellState& c : cells_) {
    put_u32(buf, c.wear_sixteenths);
    put_f64(buf, c.variation);
    put_u32(buf, c.endurance_limit);
    buf.push_back(static_cast<char>(c.value));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorKind::kFormat, "failed to write device image");
}

void Device::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::kFormat,
                "cannot open " + path.string() + " for writing");
  }
  save(out);
}

Device Device::load(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "RRWM", 4) != 0) {
    throw Error(ErrorKind::kFormat, "bad magic: not a device image");
  }
  const std::uint32_t version = r.u32();
  if (version != kImageVersion) {
    throw Error(ErrorKind::kFormat,
                "unsupported image version " + std::to_string(version));
  }
  Device dev;
  const std::uint64_t count = r.u64();
  dev.model_.t_set_fresh_s = r.f64();
  dev.model_.t_reset_fresh_s = r.f64();
  dev.model_.set_growth_amplitude = r.f64();
  dev.model_.reset_growth_amplitude = r.f64();
  dev.model_.growth_exponent = r.f64();
  dev.model_.growth_half_pairs = r.f64();
  dev.model_.temp_coeff_per_c = r.f64();
  dev.model_.meas_noise_sigma = r.f64();
  dev.model_.cell_spread = r.f64();
  dev.model_.block_spread = r.f64();
  dev.model_.rated_endurance_pairs = r.f64();
  dev.model_.buffered_write_s = r.f64();
  dev.model_.verify_only_s = r.f64();
  dev.model_.timeout_s = r.f64();
  dev.rng_.state = r.u64();
  dev.cells_.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    CellState& c = dev.cells_[i];
    c.wear_sixteenths = r.u32();
    c.variation = r.f64();
    c.endurance_limit = r.u32();
    c.value = r.u8();
  }
  return dev;
}

Device Device::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kFormat, "cannot open " + path.string());
  }
  return load(in);
}

}  // namespace rrwm
