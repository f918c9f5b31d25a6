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

#include "rrwm/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <string>

namespace rrwm {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

SeparationReport separation(const MeasurementSeries& measurements,
                            const std::vector<std::uint8_t>& bits,
                            Channel ch) {
  if (measurements.records.size() != bits.size()) {
    throw Error(ErrorKind::kState,
                "separation needs one measurement per bit (" +
                    std::to_string(measurements.records.size()) +
                    " records, " + std::to_string(bits.size()) + " bits)");
  }
  SeparationReport report;
  report.channel = ch;

  std::vector<const GroupMeasurement*> zeros, ones;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    (bits[i] ? ones : zeros).push_back(&measurements.records[i]);
  }
  if (zeros.empty() || ones.empty()) {
    report.degenerate = true;
    return report;
  }
  for (const GroupMeasurement* one : ones) {
    report.stress_pairs = std::max(report.stress_pairs, one->stress_pairs);
  }
  report.pairs.reserve(zeros.size() * ones.size());
  report.min_d_s = std::numeric_limits<double>::infinity();
  for (const GroupMeasurement* zero : zeros) {
    for (const GroupMeasurement* one : ones) {
      const double d = one->mean_s(ch) - zero->mean_s(ch);
      report.pairs.push_back(SeparationPair{zero->group, one->group, d});
      report.min_d_s = std::min(report.min_d_s, d);
    }
  }
  report.separable = report.min_d_s > 0.0;
  return report;
}

void write_separation_csv(std::ostream& out, const SeparationReport& report) {
  out << "i,j,d_seconds\n";
  for (const SeparationPair& p : report.pairs) {
    out << p.zero_bit << ',' << p.one_bit << ',' << fmt_g(p.d_s) << '\n';
  }
}

ImprintEstimate imprint_time_estimate(double pairs, double bits,
                                      double t_pair_s) {
  if (pairs < 0 || bits <= 0 || t_pair_s <= 0) {
    throw Error(ErrorKind::kState, "imprint estimate needs positive inputs");
  }
  ImprintEstimate e;
  e.total_s = pairs * bits * t_pair_s;
  e.rate_bit_per_min = e.total_s > 0 ? bits * 60.0 / e.total_s : 0.0;
  return e;
}

RetrievalEstimate retrieval_time_estimate(double t_switch_s, double bits,
                                          double n_rep) {
  if (t_switch_s <= 0 || bits <= 0 || n_rep <= 0) {
    throw Error(ErrorKind::kState, "retrieval estimate needs positive inputs");
  }
  RetrievalEstimate e;
  e.total_s = t_switch_s * bits * n_rep;
  e.rate_bits_per_s = bits / e.total_s;
  return e;
}

double endurance_cost(double pairs, double rated_pairs) {
  if (pairs < 0 || rated_pairs <= 0) {
    throw Error(ErrorKind::kState, "endurance cost needs positive inputs");
  }
  return pairs / rated_pairs;
}

namespace {

void check_bake_preconditions(Device& dev, const WatermarkLayout& layout,
                              double verify_temp_c) {
  if (verify_temp_c < kMinOperatingTempC || verify_temp_c > kMaxOperatingTempC) {
    throw Error(ErrorKind::kState,
                "verify temperature " + fmt_g(verify_temp_c) +
                    " C outside the rated range [-25, 85] C");
  }
  layout.validate(dev.cell_count());
  bool any_stressed = false;
  for (const BitRange& r : layout.ranges) {
    if (dev.cell(r.start).wear_sixteenths != 0) {
      any_stressed = true;
      break;
    }
  }
  if (!any_stressed) {
    throw Error(ErrorKind::kState,
                "bake verification requires an imprinted device");
  }
}

}  // namespace

SeparationReport bake_and_verify(Device& dev, const WatermarkLayout& layout,
                                 const Threshold& thr, double bake_temp_c,
                                 double verify_temp_c) {
  (void)bake_temp_c;  // stateless: no permanent drift from baking
  check_bake_preconditions(dev, layout, verify_temp_c);
  const MeasurementSeries series = extract(dev, layout, verify_temp_c);
  const Threshold at_temp =
      compensate_threshold(thr, verify_temp_c, dev.model());
  return separation(series, decode(series, at_temp), thr.channel);
}

BakeReport bake_and_verify(Device& dev, const WatermarkLayout& layout,
                           const std::vector<std::uint8_t>& expected_bits,
                           double bake_temp_c, double verify_temp_c) {
  check_bake_preconditions(dev, layout, verify_temp_c);
  const MeasurementSeries series = extract(dev, layout, verify_temp_c);
  BakeReport report;
  report.bake_temp_c = bake_temp_c;
  report.verify_temp_c = verify_temp_c;
  report.set_report = separation(series, expected_bits, Channel::kSet);
  report.reset_report = separation(series, expected_bits, Channel::kReset);
  return report;
}

void stress_sweep_report(const MeasurementSeries& series, std::ostream& out) {
  if (series.records.empty()) {
    throw Error(ErrorKind::kState, "cannot report an empty sweep series");
  }
  struct Row {
    double set_min = std::numeric_limits<double>::infinity();
    double set_max = -std::numeric_limits<double>::infinity();
    double reset_min = std::numeric_limits<double>::infinity();
    double reset_max = -std::numeric_limits<double>::infinity();
    double set_sum = 0.0, reset_sum = 0.0;
    std::uint64_t cells = 0;
  };
  std::map<std::uint64_t, Row> rows;
  for (const GroupMeasurement& rec : series.records) {
    if (rec.measured_cells == 0) continue;
    Row& row = rows[rec.stress_pairs];
    row.set_min = std::min(row.set_min, rec.set_min_s);
    row.set_max = std::max(row.set_max, rec.set_max_s);
    row.reset_min = std::min(row.reset_min, rec.reset_min_s);
    row.reset_max = std::max(row.reset_max, rec.reset_max_s);
    row.set_sum += rec.t_set_256_s * rec.measured_cells;
    row.reset_sum += rec.t_reset_256_s * rec.measured_cells;
    row.cells += rec.measured_cells;
  }
  out << "stress,set_min,set_mean,set_max,reset_min,reset_mean,reset_max\n";
  for (const auto& [stress, row] : rows) {
    out << stress << ',' << fmt_g(row.set_min) << ','
        << fmt_g(row.set_sum / static_cast<double>(row.cells)) << ','
        << fmt_g(row.set_max) << ',' << fmt_g(row.reset_min) << ','
        << fmt_g(row.reset_sum / static_cast<double>(row.cells)) << ','
        << fmt_g(row.reset_max) << '\n';
  }
}

}  // namespace rrwm
