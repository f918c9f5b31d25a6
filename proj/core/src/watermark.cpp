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

#include "rrwm/watermark.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace rrwm {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Times one set and one reset write on every address of each range and
// returns one averaged record per range. Shared by extract() and the
// characterize() sampler.
MeasurementSeries measure_ranges(Device& dev, const std::vector<BitRange>& ranges,
                                 double temp_c) {
  MeasurementSeries series;
  series.records.reserve(ranges.size());
  for (const BitRange& range : ranges) {
    GroupMeasurement rec;
    rec.group = range.bit;
    // Label the record with the wear of the live population; dead cells
    // froze their counters earlier and would mislabel the group.
    std::uint64_t live_max = 0, all_max = 0;
    bool any_live = false;
    for (std::uint64_t a = range.start; a < range.start + range.n_rep; ++a) {
      const CellState& c = dev.cell(a);
      all_max = std::max<std::uint64_t>(all_max, c.stress_pairs());
      if (!c.failed()) {
        any_live = true;
        live_max = std::max<std::uint64_t>(live_max, c.stress_pairs());
      }
    }
    rec.stress_pairs = any_live ? live_max : all_max;
    double set_sum = 0.0, reset_sum = 0.0;
    rec.set_min_s = std::numeric_limits<double>::infinity();
    rec.reset_min_s = std::numeric_limits<double>::infinity();
    rec.set_max_s = -std::numeric_limits<double>::infinity();
    rec.reset_max_s = -std::numeric_limits<double>::infinity();
    for (std::uint64_t a = range.start; a < range.start + range.n_rep; ++a) {
      const WriteResult set_w = dev.write_byte(a, 0x00, temp_c);
      const WriteResult reset_w = dev.write_byte(a, 0xFF, temp_c);
      if (set_w.failed || reset_w.failed) {
        ++rec.failed_cells;
        continue;
      }
      ++rec.measured_cells;
      set_sum += set_w.elapsed_s;
      reset_sum += reset_w.elapsed_s;
      rec.set_min_s = std::min(rec.set_min_s, set_w.elapsed_s);
      rec.set_max_s = std::max(rec.set_max_s, set_w.elapsed_s);
      rec.reset_min_s = std::min(rec.reset_min_s, reset_w.elapsed_s);
      rec.reset_max_s = std::max(rec.reset_max_s, reset_w.elapsed_s);
    }
    if (rec.measured_cells > 0) {
      rec.t_set_256_s = set_sum / rec.measured_cells;
      rec.t_reset_256_s = reset_sum / rec.measured_cells;
    } else {
      rec.t_set_256_s = rec.t_reset_256_s = 0.0;
      rec.set_min_s = rec.set_max_s = 0.0;
      rec.reset_min_s = rec.reset_max_s = 0.0;
    }
    series.records.push_back(rec);
  }
  return series;
}

std::vector<BitRange> chunk_ranges(std::uint64_t start, std::uint64_t count) {
  std::vector<BitRange> ranges;
  std::uint32_t group = 0;
  for (std::uint64_t off = 0; off < count; off += kWriteBufferBytes) {
    BitRange r;
    r.bit = group++;
    r.start = start + off;
    r.n_rep = static_cast<std::uint32_t>(
        std::min<std::uint64_t>(kWriteBufferBytes, count - off));
    ranges.push_back(r);
  }
  return ranges;
}

}  // namespace

WatermarkLayout WatermarkLayout::contiguous(std::uint32_t bits,
                                            std::uint64_t base,
                                            std::uint32_t n_rep) {
  WatermarkLayout layout;
  layout.ranges.reserve(bits);
  for (std::uint32_t i = 0; i < bits; ++i) {
    layout.ranges.push_back(
        BitRange{i, base + static_cast<std::uint64_t>(i) * n_rep, n_rep});
  }
  return layout;
}

void WatermarkLayout::validate(std::uint64_t cell_count) const {
  if (ranges.empty()) {
    throw Error(ErrorKind::kState, "layout has no bit ranges");
  }
  std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
  spans.reserve(ranges.size());
  for (const BitRange& r : ranges) {
    if (r.n_rep == 0) {
      throw Error(ErrorKind::kState, "layout range with n_rep = 0");
    }
    if (r.start > cell_count || r.n_rep > cell_count - r.start) {
      throw Error(ErrorKind::kBounds,
                  "layout bit " + std::to_string(r.bit) +
                      " outside device of " + std::to_string(cell_count) +
                      " cells");
    }
    spans.emplace_back(r.start, r.start + r.n_rep);
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first < spans[i - 1].second) {
      throw Error(ErrorKind::kState, "layout ranges overlap");
    }
  }
}

WatermarkLayout WatermarkLayout::parse(std::istream& in) {
  WatermarkLayout layout;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    BitRange r;
    unsigned long long bit = 0, start = 0, n_rep = 0;
    if (std::sscanf(line.c_str(), "%llu , %llu , %llu", &bit, &start, &n_rep) != 3) {
      throw Error(ErrorKind::kFormat,
                  "layout line " + std::to_string(lineno) +
                      ": expected bit,start,n_rep");
    }
    r.bit = static_cast<std::uint32_t>(bit);
    r.start = start;
    r.n_rep = static_cast<std::uint32_t>(n_rep);
    layout.ranges.push_back(r);
  }
  if (layout.ranges.empty()) {
    throw Error(ErrorKind::kFormat, "layout file has no ranges");
  }
  return layout;
}

WatermarkLayout WatermarkLayout::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kFormat, "cannot open layout " + path);
  return parse(in);
}

void WatermarkLayout::write(std::ostream& out) const {
  for (const BitRange& r : ranges) {
    out << r.bit << ',' << r.start << ',' << r.n_rep << '\n';
  }
}

Threshold compensate_threshold(const Threshold& thr, double to_temp_c,
                               const TimingModel& model) {
  const double scale = model.temp_factor(to_temp_c) / model.temp_factor(thr.temp_c);
  return Threshold{thr.channel, thr.value_s * scale, thr.margin_s * scale,
                   to_temp_c};
}

MeasurementSeries characterize(Device& dev, std::uint64_t start,
                               std::uint64_t count,
                               const CharacterizeOptions& opts) {
  if (count == 0) {
    throw Error(ErrorKind::kState, "characterize needs at least one address");
  }
  if (opts.sample_every == 0) {
    throw Error(ErrorKind::kState, "sample_every must be positive");
  }
  const double sweep_cap = 2.0 * dev.model().rated_endurance_pairs;
  if (static_cast<double>(opts.pairs) > sweep_cap) {
    throw Error(ErrorKind::kBudget,
                "sweep of " + std::to_string(opts.pairs) +
                    " pairs exceeds twice the rated endurance");
  }
  for (std::uint64_t a = start; a < start + count; ++a) {
    if (dev.cell(a).wear_sixteenths != 0) {
      throw Error(ErrorKind::kState,
                  "characterize requires fresh addresses; address " +
                      std::to_string(a) + " is already stressed");
    }
  }

  const std::vector<BitRange> groups = chunk_ranges(start, count);
  MeasurementSeries series;

  dev.fill_buffered(start, count, 0xFF, opts.temp_c);
  auto sample = [&] {
    MeasurementSeries s = measure_ranges(dev, groups, opts.temp_c);
    series.records.insert(series.records.end(), s.records.begin(),
                          s.records.end());
  };

  sample();  // fresh record
  std::uint64_t remaining = opts.pairs;
  while (remaining > 0) {
    const std::uint64_t step = std::min(opts.sample_every, remaining);
    dev.stress_range(start, count, step);
    remaining -= step;
    sample();
  }
  return series;
}

ImprintReport imprint(Device& dev, const WatermarkLayout& layout,
                      const std::vector<std::uint8_t>& bits,
                      const ImprintOptions& opts) {
  layout.validate(dev.cell_count());
  if (bits.size() != layout.ranges.size()) {
    throw Error(ErrorKind::kState,
                "watermark has " + std::to_string(bits.size()) +
                    " bits but the layout has " +
                    std::to_string(layout.ranges.size()) + " ranges");
  }
  const double cap = opts.budget_cap * dev.model().rated_endurance_pairs;
  if (static_cast<double>(opts.pairs) > cap) {
    throw Error(ErrorKind::kBudget,
                "imprint budget of " + std::to_string(opts.pairs) +
                    " pairs exceeds the endurance cap of " +
                    fmt_g(cap) + " pairs per address");
  }
  for (const BitRange& r : layout.ranges) {
    for (std::uint64_t a = r.start; a < r.start + r.n_rep; ++a) {
      if (dev.cell(a).wear_sixteenths != 0) {
        throw Error(ErrorKind::kState,
                    "imprint requires fresh addresses; address " +
                        std::to_string(a) + " is already stressed");
      }
    }
  }

  const double busy_before = dev.elapsed_s();
  ImprintReport report;
  report.bits = layout.bit_count();
  report.pairs_per_one_bit = opts.pairs;

  for (const BitRange& r : layout.ranges) {
    dev.fill_buffered(r.start, r.n_rep, 0xFF, opts.temp_c);
  }
  for (std::size_t i = 0; i < layout.ranges.size(); ++i) {
    if (!bits[i]) continue;
    ++report.one_bits;
    const BitRange& r = layout.ranges[i];
    dev.stress_range(r.start, r.n_rep, opts.pairs);
    report.cell_pairs_applied +=
        static_cast<std::uint64_t>(r.n_rep) * opts.pairs;
  }

  const double t_pair = 2.0 * dev.model().buffered_write_s;
  report.sim_elapsed_s = dev.elapsed_s() - busy_before;
  report.formula_all_bits_s =
      static_cast<double>(opts.pairs) * report.bits * t_pair;
  report.formula_one_bits_s =
      static_cast<double>(opts.pairs) * report.one_bits * t_pair;
  return report;
}

MeasurementSeries extract(Device& dev, const WatermarkLayout& layout,
                          double temp_c) {
  layout.validate(dev.cell_count());
  MeasurementSeries series = measure_ranges(dev, layout.ranges, temp_c);
  std::string unreadable;
  for (const GroupMeasurement& rec : series.records) {
    if (rec.failed_cells > rec.measured_cells) {  // majority failed
      if (!unreadable.empty()) unreadable += ", ";
      unreadable += std::to_string(rec.group);
    }
  }
  if (!unreadable.empty()) {
    throw Error(ErrorKind::kUnreadable,
                "unreadable watermark bits (failed-cell majority): " +
                    unreadable);
  }
  return series;
}

Threshold calibrate_threshold(const MeasurementSeries& fresh,
                              const MeasurementSeries& stressed, Channel ch,
                              double temp_c) {
  if (fresh.records.empty() || stressed.records.empty()) {
    throw Error(ErrorKind::kState,
                "calibration needs non-empty fresh and stressed series");
  }
  double max_fresh = -std::numeric_limits<double>::infinity();
  double min_stressed = std::numeric_limits<double>::infinity();
  std::uint32_t max_fresh_group = 0, min_stressed_group = 0;
  for (const GroupMeasurement& rec : fresh.records) {
    if (rec.mean_s(ch) > max_fresh) {
      max_fresh = rec.mean_s(ch);
      max_fresh_group = rec.group;
    }
  }
  for (const GroupMeasurement& rec : stressed.records) {
    if (rec.mean_s(ch) < min_stressed) {
      min_stressed = rec.mean_s(ch);
      min_stressed_group = rec.group;
    }
  }
  if (min_stressed <= max_fresh) {
    throw Error(ErrorKind::kNonSeparable,
                std::string("classes overlap on the ") + channel_name(ch) +
                    " channel: fresh group " +
                    std::to_string(max_fresh_group) + " averages " +
                    fmt_g(max_fresh) + " s, stressed group " +
                    std::to_string(min_stressed_group) + " averages " +
                    fmt_g(min_stressed) + " s");
  }
  Threshold thr;
  thr.channel = ch;
  thr.value_s = 0.5 * (max_fresh + min_stressed);
  thr.margin_s = 0.5 * (min_stressed - max_fresh);
  thr.temp_c = temp_c;
  return thr;
}

std::vector<std::uint8_t> decode(const MeasurementSeries& measurements,
                                 const Threshold& thr) {
  std::vector<std::uint8_t> bits;
  bits.reserve(measurements.records.size());
  for (const GroupMeasurement& rec : measurements.records) {
    bits.push_back(rec.mean_s(thr.channel) > thr.value_s ? 1 : 0);
  }
  return bits;
}

std::vector<std::uint8_t> bits_from_hex(const std::string& hex) {
  if (hex.empty()) throw Error(ErrorKind::kFormat, "empty watermark string");
  std::vector<std::uint8_t> bits;
  bits.reserve(hex.size() * 4);
  for (char c : hex) {
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else {
      throw Error(ErrorKind::kFormat,
                  std::string("invalid hex digit '") + c + "' in watermark");
    }
    for (int b = 3; b >= 0; --b) bits.push_back((v >> b) & 1);
  }
  return bits;
}

std::string hex_from_bits(const std::vector<std::uint8_t>& bits) {
  if (bits.empty() || bits.size() % 4 != 0) {
    throw Error(ErrorKind::kFormat,
                "bit count must be a positive multiple of 4");
  }
  static const char* digits = "0123456789ABCDEF";
  std::string hex;
  hex.reserve(bits.size() / 4);
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    int v = 0;
    for (int b = 0; b < 4; ++b) v = (v << 1) | (bits[i + b] ? 1 : 0);
    hex.push_back(digits[v]);
  }
  return hex;
}

void write_measurements_csv(std::ostream& out,
                            const MeasurementSeries& series) {
  out << "group,stress_count,t_set_256_s,t_reset_256_s\n";
  for (const GroupMeasurement& rec : series.records) {
    out << rec.group << ',' << rec.stress_pairs << ','
        << fmt_g(rec.t_set_256_s) << ',' << fmt_g(rec.t_reset_256_s) << '\n';
  }
}

MeasurementSeries read_measurements_csv(std::istream& in) {
  MeasurementSeries series;
  std::string line;
  if (!std::getline(in, line) ||
      line.rfind("group,stress_count,t_set_256_s,t_reset_256_s", 0) != 0) {
    throw Error(ErrorKind::kFormat, "missing measurements CSV header");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    GroupMeasurement rec;
    unsigned long long group = 0, stress = 0;
    double t_set = 0.0, t_reset = 0.0;
    if (std::sscanf(line.c_str(), "%llu,%llu,%lf,%lf", &group, &stress, &t_set,
                    &t_reset) != 4) {
      throw Error(ErrorKind::kFormat,
                  "measurements CSV line " + std::to_string(lineno) +
                      ": expected group,stress,t_set,t_reset");
    }
    rec.group = static_cast<std::uint32_t>(group);
    rec.stress_pairs = stress;
    rec.t_set_256_s = rec.set_min_s = rec.set_max_s = t_set;
    rec.t_reset_256_s = rec.reset_min_s = rec.reset_max_s = t_reset;
    rec.measured_cells = 1;
    series.records.push_back(rec);
  }
  return series;
}

void write_threshold(std::ostream& out, const Threshold& thr) {
  out << "channel=" << channel_name(thr.channel) << '\n'
      << "value_s=" << fmt_g(thr.value_s) << '\n'
      << "margin_s=" << fmt_g(thr.margin_s) << '\n'
      << "temp_c=" << fmt_g(thr.temp_c) << '\n';
}

Threshold read_threshold(std::istream& in) {
  Threshold thr;
  bool have_channel = false, have_value = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kFormat, "threshold line without '=': " + line);
    }
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "channel") {
      if (val == "set") thr.channel = Channel::kSet;
      else if (val == "reset") thr.channel = Channel::kReset;
      else throw Error(ErrorKind::kFormat, "unknown channel: " + val);
      have_channel = true;
    } else if (key == "value_s") {
      thr.value_s = std::stod(val);
      have_value = true;
    } else if (key == "margin_s") {
      thr.margin_s = std::stod(val);
    } else if (key == "temp_c") {
      thr.temp_c = std::stod(val);
    } else {
      throw Error(ErrorKind::kFormat, "unknown threshold key: " + key);
    }
  }
  if (!have_channel || !have_value) {
    throw Error(ErrorKind::kFormat, "threshold file missing channel or value");
  }
  return thr;
}

}  // namespace rrwm
