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
#include <numeric>
#include <sstream>

#include "doctest.h"

using namespace rrwm;

namespace {

// 16384 cells: 32 watermark groups, 16 fresh + 16 stressed scratch groups.
constexpr std::uint64_t kTestCells = 16384;
constexpr std::uint64_t kScratchFresh = 8192;
constexpr std::uint64_t kScratchStressed = 12288;

Threshold scratch_calibrate(Device& dev, Channel ch, std::uint64_t pairs,
                            double temp_c = kRefTempC) {
  const WatermarkLayout fresh = WatermarkLayout::contiguous(16, kScratchFresh);
  const WatermarkLayout stressed =
      WatermarkLayout::contiguous(16, kScratchStressed);
  ImprintOptions opts;
  opts.pairs = pairs;
  opts.temp_c = temp_c;
  imprint(dev, stressed, std::vector<std::uint8_t>(16, 1), opts);
  const MeasurementSeries f = extract(dev, fresh, temp_c);
  const MeasurementSeries s = extract(dev, stressed, temp_c);
  return calibrate_threshold(f, s, ch, temp_c);
}

GroupMeasurement record_with(std::uint32_t group, double t_set,
                             double t_reset) {
  GroupMeasurement rec;
  rec.group = group;
  rec.t_set_256_s = rec.set_min_s = rec.set_max_s = t_set;
  rec.t_reset_256_s = rec.reset_min_s = rec.reset_max_s = t_reset;
  rec.measured_cells = 1;
  return rec;
}

}  // namespace

TEST_CASE("hex watermark round-trips through the bit vector") {
  const std::vector<std::uint8_t> bits = bits_from_hex("C2F740EB");
  REQUIRE(bits.size() == 32);
  CHECK(std::accumulate(bits.begin(), bits.end(), 0) == 17);  // popcount
  CHECK(hex_from_bits(bits) == "C2F740EB");
  CHECK(hex_from_bits(bits_from_hex("c2f740eb")) == "C2F740EB");
  CHECK(bits[0] == 1);  // leading hex digit C = 1100
  CHECK(bits[1] == 1);
  CHECK(bits[2] == 0);
  CHECK_THROWS_AS(bits_from_hex("12G4"), Error);
  CHECK_THROWS_AS(bits_from_hex(""), Error);
  CHECK_THROWS_AS(hex_from_bits({1, 0, 1}), Error);
}

TEST_CASE("layout files round-trip and validate") {
  const WatermarkLayout layout = WatermarkLayout::contiguous(4, 1024, 128);
  std::ostringstream out;
  layout.write(out);
  CHECK(out.str() == "0,1024,128\n1,1152,128\n2,1280,128\n3,1408,128\n");

  std::istringstream in(out.str());
  const WatermarkLayout parsed = WatermarkLayout::parse(in);
  REQUIRE(parsed.ranges.size() == 4);
  CHECK(parsed.ranges[2].start == 1280);
  CHECK(parsed.ranges[2].n_rep == 128);
  CHECK_NOTHROW(parsed.validate(4096));

  std::istringstream junk("0,1024\n");
  CHECK_THROWS_AS(WatermarkLayout::parse(junk), Error);
}

TEST_CASE("layout validation flags overlap and out-of-range bits") {
  WatermarkLayout overlapping;
  overlapping.ranges = {BitRange{0, 0, 256}, BitRange{1, 255, 256}};
  CHECK_THROWS_AS(overlapping.validate(4096), Error);

  WatermarkLayout outside;
  outside.ranges = {BitRange{0, 4000, 256}};
  CHECK_THROWS_AS(outside.validate(4096), Error);

  CHECK_THROWS_AS(WatermarkLayout{}.validate(4096), Error);
}

TEST_CASE("characterize with zero pairs yields a single fresh record per group") {
  Device dev = Device::create(512, 12);
  CharacterizeOptions opts;
  opts.pairs = 0;
  const MeasurementSeries series = characterize(dev, 0, 512, opts);
  REQUIRE(series.records.size() == 2);  // 512 addresses = 2 groups
  CHECK(series.records[0].stress_pairs == 0);
  CHECK(series.records[1].stress_pairs == 0);
  CHECK(series.records[0].measured_cells == 256);
}

TEST_CASE("characterize rejects already-stressed addresses") {
  Device dev = Device::create(512, 12);
  dev.write_byte(100, 0x00, 25.0);
  CharacterizeOptions opts;
  opts.pairs = 10;
  CHECK_THROWS_AS(characterize(dev, 0, 512, opts), Error);
}

TEST_CASE("characterize records equal the closed-form model with zero noise") {
  TimingModel m = TimingModel::calibrated_defaults();
  m.meas_noise_sigma = 0.0;
  Device dev = Device::create(512, 21, m);
  CharacterizeOptions opts;
  opts.pairs = 2002;
  opts.sample_every = 1000;
  const MeasurementSeries series = characterize(dev, 0, 512, opts);
  REQUIRE(series.records.size() == 2 * 4);  // samples at 0, 1001, 2002, 2005

  for (const GroupMeasurement& rec : series.records) {
    const std::uint64_t group_start = rec.group * 256ull;
    double set_sum = 0.0, reset_sum = 0.0;
    double set_min = 1e9, set_max = -1e9;
    for (std::uint64_t a = group_start; a < group_start + 256; ++a) {
      CellState c;
      c.wear_sixteenths = static_cast<std::uint32_t>(16 * rec.stress_pairs);
      c.endurance_limit = dev.cell(a).endurance_limit;
      c.variation = dev.cell(a).variation;
      const double t_set = m.set_time_s(c, 25.0, nullptr);
      set_sum += t_set;
      reset_sum += m.reset_time_s(c, 25.0, nullptr);
      set_min = std::min(set_min, t_set);
      set_max = std::max(set_max, t_set);
    }
    REQUIRE(rec.t_set_256_s == doctest::Approx(set_sum / 256).epsilon(1e-14));
    REQUIRE(rec.t_reset_256_s ==
            doctest::Approx(reset_sum / 256).epsilon(1e-14));
    REQUIRE(rec.set_min_s == doctest::Approx(set_min).epsilon(1e-14));
    REQUIRE(rec.set_max_s == doctest::Approx(set_max).epsilon(1e-14));
  }
}

TEST_CASE("imprint stresses one-bit ranges by N and leaves zero-bits fresh") {
  Device dev = Device::create(kTestCells, 5);
  const WatermarkLayout layout = WatermarkLayout::contiguous(32, 0);
  const std::vector<std::uint8_t> bits = bits_from_hex("C2F740EB");
  ImprintOptions opts;
  opts.pairs = 10'000;
  const ImprintReport report = imprint(dev, layout, bits, opts);

  CHECK(report.bits == 32);
  CHECK(report.one_bits == 17);
  CHECK(report.cell_pairs_applied == 17ull * 256 * 10'000);
  CHECK(report.formula_all_bits_s == doctest::Approx(3200.0));
  CHECK(report.formula_one_bits_s == doctest::Approx(1700.0));
  // Actual cost: popcount-weighted stressing plus 32 init commands.
  CHECK(report.sim_elapsed_s ==
        doctest::Approx(1700.0 + 32 * 5e-3).epsilon(1e-9));

  for (std::size_t i = 0; i < 32; ++i) {
    const std::uint64_t addr = layout.ranges[i].start;
    for (std::uint64_t a = addr; a < addr + 256; ++a) {
      REQUIRE(dev.cell(a).stress_pairs() == (bits[i] ? 10'000u : 0u));
    }
  }
}

TEST_CASE("an all-zero watermark applies no stress and almost no time") {
  Device dev = Device::create(kTestCells, 5);
  const WatermarkLayout layout = WatermarkLayout::contiguous(32, 0);
  const ImprintReport report =
      imprint(dev, layout, std::vector<std::uint8_t>(32, 0), ImprintOptions{});
  CHECK(report.one_bits == 0);
  CHECK(report.cell_pairs_applied == 0);
  CHECK(report.sim_elapsed_s == doctest::Approx(32 * 5e-3));  // init only
  for (std::uint64_t a = 0; a < 8192; ++a) {
    REQUIRE(dev.cell(a).stress_pairs() == 0);
  }
}

TEST_CASE("imprint enforces the endurance budget cap and fresh targets") {
  Device dev = Device::create(kTestCells, 5);
  const WatermarkLayout layout = WatermarkLayout::contiguous(32, 0);
  const std::vector<std::uint8_t> bits = bits_from_hex("C2F740EB");

  ImprintOptions over_budget;
  over_budget.pairs = 60'000;  // > 10% of 500K rated pairs
  CHECK_THROWS_AS(imprint(dev, layout, bits, over_budget), Error);

  ImprintOptions ok;
  ok.pairs = 1'000;
  imprint(dev, layout, bits, ok);
  CHECK_THROWS_AS(imprint(dev, layout, bits, ok), Error);  // no longer fresh
}

TEST_CASE("imprint rejects a watermark/layout size mismatch") {
  Device dev = Device::create(kTestCells, 5);
  const WatermarkLayout layout = WatermarkLayout::contiguous(8, 0);
  CHECK_THROWS_AS(imprint(dev, layout, bits_from_hex("C2F740EB"), ImprintOptions{}),
                  Error);
}

TEST_CASE("extract consumes exactly one pair per address") {
  Device dev = Device::create(kTestCells, 6);
  const WatermarkLayout layout = WatermarkLayout::contiguous(32, 0);
  imprint(dev, layout, bits_from_hex("C2F740EB"), ImprintOptions{});
  std::vector<std::uint32_t> before;
  for (std::uint64_t a = 0; a < 8192; ++a) {
    before.push_back(dev.cell(a).stress_pairs());
  }
  extract(dev, layout);
  for (std::uint64_t a = 0; a < 8192; ++a) {
    REQUIRE(dev.cell(a).stress_pairs() == before[a] + 1);
  }
}

TEST_CASE("full pipeline: imprint, calibrate, extract, decode") {
  Device dev = Device::create(kTestCells, 1);
  const WatermarkLayout layout = WatermarkLayout::contiguous(32, 0);
  const std::vector<std::uint8_t> bits = bits_from_hex("C2F740EB");
  ImprintOptions opts;
  opts.pairs = 10'000;
  imprint(dev, layout, bits, opts);
  const Threshold thr = scratch_calibrate(dev, Channel::kSet, 10'000);
  CHECK(thr.margin_s > 0.0);
  const MeasurementSeries series = extract(dev, layout);
  CHECK(decode(series, thr) == bits);
  CHECK(hex_from_bits(decode(series, thr)) == "C2F740EB");
}

TEST_CASE("a fresh device decodes to all-zero against a valid threshold") {
  Device dev = Device::create(kTestCells, 2);
  const Threshold thr = scratch_calibrate(dev, Channel::kSet, 10'000);
  const WatermarkLayout layout = WatermarkLayout::contiguous(32, 0);
  const MeasurementSeries series = extract(dev, layout);
  const std::vector<std::uint8_t> decoded = decode(series, thr);
  CHECK(std::count(decoded.begin(), decoded.end(), 1) == 0);
}

TEST_CASE("round-trip decode holds across seeds and random watermarks") {
  std::uint64_t rng = 0xFEED;
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t seed = 1 + trial % 5;
    Device dev = Device::create(kTestCells, seed);
    std::vector<std::uint8_t> bits(32);
    for (auto& b : bits) b = splitmix64_next(rng) & 1;
    const WatermarkLayout layout = WatermarkLayout::contiguous(32, 0);
    ImprintOptions opts;
    opts.pairs = 10'000;
    imprint(dev, layout, bits, opts);
    const Threshold thr = scratch_calibrate(dev, Channel::kSet, 10'000);
    REQUIRE(decode(extract(dev, layout), thr) == bits);
  }
}

TEST_CASE("averages separate at 10K while single addresses still overlap") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    Device dev = Device::create(kTestCells, seed);
    const WatermarkLayout layout = WatermarkLayout::contiguous(32, 0);
    const std::vector<std::uint8_t> bits = bits_from_hex("C2F740EB");
    ImprintOptions opts;
    opts.pairs = 10'000;
    imprint(dev, layout, bits, opts);
    const MeasurementSeries series = extract(dev, layout);

    double min_one_avg = 1e9, max_zero_avg = -1e9;
    double min_one_addr = 1e9, max_zero_addr = -1e9;
    for (std::size_t i = 0; i < 32; ++i) {
      const GroupMeasurement& rec = series.records[i];
      if (bits[i]) {
        min_one_avg = std::min(min_one_avg, rec.t_set_256_s);
        min_one_addr = std::min(min_one_addr, rec.set_min_s);
      } else {
        max_zero_avg = std::max(max_zero_avg, rec.t_set_256_s);
        max_zero_addr = std::max(max_zero_addr, rec.set_max_s);
      }
    }
    REQUIRE(min_one_avg > max_zero_avg);      // averaged classes never touch
    REQUIRE(min_one_addr < max_zero_addr);    // raw addresses still do
  }
}

TEST_CASE("calibrate_threshold takes the midpoint and half-gap margin") {
  MeasurementSeries fresh, stressed;
  fresh.records = {record_with(0, 180e-6, 170e-6),
                   record_with(1, 200e-6, 190e-6)};
  stressed.records = {record_with(2, 300e-6, 280e-6),
                      record_with(3, 320e-6, 300e-6)};
  const Threshold thr =
      calibrate_threshold(fresh, stressed, Channel::kSet, 25.0);
  CHECK(thr.value_s == doctest::Approx(250e-6).epsilon(1e-12));
  CHECK(thr.margin_s == doctest::Approx(50e-6).epsilon(1e-12));
  CHECK(thr.channel == Channel::kSet);
}

TEST_CASE("calibrate_threshold reports overlapping classes as non-separable") {
  MeasurementSeries fresh, stressed;
  fresh.records = {record_with(0, 250e-6, 240e-6)};
  stressed.records = {record_with(1, 240e-6, 230e-6)};
  CHECK_THROWS_AS(calibrate_threshold(fresh, stressed, Channel::kSet, 25.0),
                  Error);
  try {
    calibrate_threshold(fresh, stressed, Channel::kSet, 25.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNonSeparable);
  }
  CHECK_THROWS_AS(calibrate_threshold(MeasurementSeries{}, stressed,
                                      Channel::kSet, 25.0),
                  Error);
}

TEST_CASE("the set channel calibrates at 10K pairs; 5K is not separable yet") {
  Device dev10 = Device::create(kTestCells, 1);
  CHECK(scratch_calibrate(dev10, Channel::kSet, 10'000).margin_s > 0.0);

  // At 5K the fresh and stressed averages still overlap across blocks.
  Device dev5 = Device::create(kTestCells, 1);
  CHECK_THROWS_AS(scratch_calibrate(dev5, Channel::kSet, 5'000), Error);
}

TEST_CASE("decode reads an exact tie as fresh") {
  Threshold thr;
  thr.channel = Channel::kSet;
  thr.value_s = 250e-6;
  MeasurementSeries series;
  series.records = {record_with(0, 250e-6, 0), record_with(1, 251e-6, 0),
                    record_with(2, 249e-6, 0)};
  const std::vector<std::uint8_t> bits = decode(series, thr);
  CHECK(bits == std::vector<std::uint8_t>{0, 1, 0});
}

TEST_CASE("failed cells are excluded until they outnumber live ones") {
  TimingModel m = TimingModel::calibrated_defaults();
  m.rated_endurance_pairs = 8;
  Device dev = Device::create(64, 44, m);
  WatermarkLayout layout;
  layout.ranges = {BitRange{0, 0, 8}, BitRange{1, 8, 8}};

  // Kill exactly half of bit 0's cells: still readable.
  for (std::uint64_t a = 0; a < 4; ++a) dev.stress_range(a, 1, 1000);
  MeasurementSeries series = extract(dev, layout);
  CHECK(series.records[0].failed_cells == 4);
  CHECK(series.records[0].measured_cells == 4);

  // One more dead cell tips the majority: the bit becomes unreadable.
  dev.stress_range(4, 1, 1000);
  CHECK_THROWS_AS(extract(dev, layout), Error);
  try {
    extract(dev, layout);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnreadable);
  }
}

TEST_CASE("reset-channel separability implies set-channel separability") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    for (std::uint64_t pairs : {10'000ull, 15'000ull}) {
      Device dev = Device::create(kTestCells, seed);
      const WatermarkLayout layout = WatermarkLayout::contiguous(32, 0);
      const std::vector<std::uint8_t> bits = bits_from_hex("C2F740EB");
      ImprintOptions opts;
      opts.pairs = pairs;
      imprint(dev, layout, bits, opts);
      const MeasurementSeries series = extract(dev, layout);

      auto classes_separate = [&](Channel ch) {
        double min_one = 1e9, max_zero = -1e9;
        for (std::size_t i = 0; i < 32; ++i) {
          const double v = series.records[i].mean_s(ch);
          if (bits[i]) min_one = std::min(min_one, v);
          else max_zero = std::max(max_zero, v);
        }
        return min_one > max_zero;
      };
      if (classes_separate(Channel::kReset)) {
        REQUIRE(classes_separate(Channel::kSet));
      }
    }
  }
}

TEST_CASE("after imprint the stressed averages can only drift upward") {
  TimingModel m = TimingModel::calibrated_defaults();
  m.meas_noise_sigma = 0.0;
  Device dev = Device::create(kTestCells, 9, m);
  const WatermarkLayout layout = WatermarkLayout::contiguous(32, 0);
  const std::vector<std::uint8_t> bits = bits_from_hex("C2F740EB");
  ImprintOptions opts;
  opts.pairs = 10'000;
  imprint(dev, layout, bits, opts);

  const MeasurementSeries first = extract(dev, layout);
  const MeasurementSeries second = extract(dev, layout);  // one more pair
  for (std::size_t i = 0; i < 32; ++i) {
    REQUIRE(second.records[i].t_set_256_s >= first.records[i].t_set_256_s);
  }
}

TEST_CASE("measurement CSV round-trips records") {
  MeasurementSeries series;
  series.records = {record_with(0, 1.9e-4, 2.1e-4),
                    record_with(1, 2.5e-4, 2.6e-4)};
  series.records[1].stress_pairs = 10'000;
  std::ostringstream out;
  write_measurements_csv(out, series);
  std::istringstream in(out.str());
  const MeasurementSeries parsed = read_measurements_csv(in);
  REQUIRE(parsed.records.size() == 2);
  CHECK(parsed.records[1].stress_pairs == 10'000);
  CHECK(parsed.records[1].t_set_256_s == doctest::Approx(2.5e-4));

  std::istringstream bad("not,a,header\n");
  CHECK_THROWS_AS(read_measurements_csv(bad), Error);
}

TEST_CASE("threshold files round-trip and reject unknown keys") {
  Threshold thr;
  thr.channel = Channel::kReset;
  thr.value_s = 2.34e-4;
  thr.margin_s = 1.2e-5;
  thr.temp_c = 80.0;
  std::ostringstream out;
  write_threshold(out, thr);
  std::istringstream in(out.str());
  const Threshold parsed = read_threshold(in);
  CHECK(parsed.channel == Channel::kReset);
  CHECK(parsed.value_s == doctest::Approx(2.34e-4));
  CHECK(parsed.margin_s == doctest::Approx(1.2e-5));
  CHECK(parsed.temp_c == doctest::Approx(80.0));

  std::istringstream bad("channel=set\nvalue_s=1e-4\nwhat=3\n");
  CHECK_THROWS_AS(read_threshold(bad), Error);
}

TEST_CASE("threshold temperature compensation scales with the temp factor") {
  const TimingModel m = TimingModel::calibrated_defaults();
  Threshold thr;
  thr.value_s = 2.4e-4;
  thr.margin_s = 1e-5;
  thr.temp_c = 25.0;
  const Threshold at80 = compensate_threshold(thr, 80.0, m);
  CHECK(at80.value_s == doctest::Approx(2.4e-4 * m.temp_factor(80.0)));
  const Threshold back = compensate_threshold(at80, 25.0, m);
  CHECK(back.value_s == doctest::Approx(2.4e-4).epsilon(1e-12));
}
