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

// rrwm: simulate byte-addressable ReRAM chips that wear out under set/reset
// stress, imprint irreversible watermarks by stressing cells, and read the
// watermarks back through write-latency measurements.
//
// Exit codes: 0 success/PASS, 2 verification FAIL, 3 format/usage error,
// 4 model or separability error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "rrwm/analysis.hpp"
#include "rrwm/device.hpp"
#include "rrwm/watermark.hpp"

namespace {

using rrwm::Channel;
using rrwm::Device;
using rrwm::Error;
using rrwm::ErrorKind;
using rrwm::MeasurementSeries;
using rrwm::Threshold;
using rrwm::TimingModel;
using rrwm::WatermarkLayout;

constexpr int kExitPass = 0;
constexpr int kExitFail = 2;
constexpr int kExitFormat = 3;
constexpr int kExitModel = 4;

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

int exit_code_for(const Error& e) {
  return e.kind() == ErrorKind::kFormat ? kExitFormat : kExitModel;
}

TimingModel model_with_overrides(const std::vector<std::string>& overrides) {
  TimingModel m = TimingModel::calibrated_defaults();
  for (const std::string& kv : overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kFormat, "model override without '=': " + kv);
    }
    const std::string key = kv.substr(0, eq);
    double value = 0.0;
    try {
      value = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error(ErrorKind::kFormat, "model override with a non-numeric value: " + kv);
    }
    if (key == "t_set_fresh_s") m.t_set_fresh_s = value;
    else if (key == "t_reset_fresh_s") m.t_reset_fresh_s = value;
    else if (key == "set_growth_amplitude") m.set_growth_amplitude = value;
    else if (key == "reset_growth_amplitude") m.reset_growth_amplitude = value;
    else if (key == "growth_exponent") m.growth_exponent = value;
    else if (key == "growth_half_pairs") m.growth_half_pairs = value;
    else if (key == "temp_coeff_per_c") m.temp_coeff_per_c = value;
    else if (key == "meas_noise_sigma") m.meas_noise_sigma = value;
    else if (key == "cell_spread") m.cell_spread = value;
    else if (key == "block_spread") m.block_spread = value;
    else if (key == "rated_endurance_pairs") m.rated_endurance_pairs = value;
    else if (key == "buffered_write_s") m.buffered_write_s = value;
    else if (key == "verify_only_s") m.verify_only_s = value;
    else if (key == "timeout_s") m.timeout_s = value;
    else throw Error(ErrorKind::kFormat, "unknown model field: " + key);
  }
  if (m.block_spread < 0 || m.cell_spread < 0 || m.block_spread > m.cell_spread ||
      m.cell_spread >= 1.0) {
    throw Error(ErrorKind::kState,
                "spreads must satisfy 0 <= block_spread <= cell_spread < 1");
  }
  return m;
}

// Shared layout flags: an explicit file or a contiguous block whose bit
// count comes from --bits or the watermark string length.
struct LayoutOpts {
  std::string layout_file;
  std::uint64_t base = 0;
  std::uint32_t bits = 0;
  std::uint32_t n_rep = rrwm::kDefaultNRep;

  WatermarkLayout resolve(std::uint32_t bits_hint) const {
    if (!layout_file.empty()) return WatermarkLayout::parse_file(layout_file);
    const std::uint32_t n = bits != 0 ? bits : bits_hint;
    if (n == 0) {
      throw Error(ErrorKind::kFormat,
                  "no layout: give --layout, or --bits/--watermark with --base");
    }
    return WatermarkLayout::contiguous(n, base, n_rep);
  }
};

void add_layout_opts(CLI::App* cmd, LayoutOpts& opts, bool with_bits = true) {
  cmd->add_option("--layout", opts.layout_file, "layout file (bit,start,n_rep lines)");
  cmd->add_option("--base", opts.base, "base address of a contiguous layout");
  if (with_bits) cmd->add_option("--bits", opts.bits, "bit count of a contiguous layout");
  cmd->add_option("--n-rep", opts.n_rep, "addresses per bit")
      ->default_val(rrwm::kDefaultNRep);
}

void save_device(const Device& dev, const std::string& path, bool no_save) {
  if (!no_save) dev.save(path);
}

Threshold threshold_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kFormat, "cannot open threshold " + path);
  return rrwm::read_threshold(in);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kFormat, "cannot open " + path + " for writing");
  out << text;
}

// Best two-cluster split of the averaged times: midpoint of the widest gap.
// Used by verify when no threshold is available and the expected pattern
// cannot calibrate one (e.g. the chip does not carry the claimed mark).
Threshold largest_gap_threshold(const MeasurementSeries& series, Channel ch,
                                double temp_c) {
  std::vector<double> values;
  values.reserve(series.records.size());
  for (const auto& rec : series.records) values.push_back(rec.mean_s(ch));
  std::sort(values.begin(), values.end());
  double best_gap = -1.0, best_mid = values.front();
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double gap = values[i] - values[i - 1];
    if (gap > best_gap) {
      best_gap = gap;
      best_mid = 0.5 * (values[i] + values[i - 1]);
    }
  }
  return Threshold{ch, best_mid, 0.5 * std::max(best_gap, 0.0), temp_c};
}

struct VerifyOutcome {
  std::vector<std::uint8_t> decoded;
  Threshold threshold;
  double min_margin_s = 0.0;
  bool calibrated_from_expectation = false;
};

VerifyOutcome run_verify(const MeasurementSeries& series,
                         const std::vector<std::uint8_t>& expect,
                         const std::string& threshold_file, Channel ch,
                         double temp_c, const TimingModel& model) {
  VerifyOutcome out;
  if (series.records.size() != expect.size()) {
    throw Error(ErrorKind::kState,
                "layout yields " + std::to_string(series.records.size()) +
                    " bits but the expected watermark has " +
                    std::to_string(expect.size()));
  }
  if (!threshold_file.empty()) {
    out.threshold =
        rrwm::compensate_threshold(threshold_from_file(threshold_file), temp_c, model);
  } else {
    MeasurementSeries fresh, stressed;
    for (std::size_t i = 0; i < expect.size(); ++i) {
      (expect[i] ? stressed : fresh).records.push_back(series.records[i]);
    }
    if (fresh.records.empty() || stressed.records.empty()) {
      throw Error(ErrorKind::kState,
                  "expected pattern is all-0 or all-1; provide --threshold");
    }
    try {
      out.threshold = rrwm::calibrate_threshold(fresh, stressed, ch, temp_c);
      out.calibrated_from_expectation = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNonSeparable) throw;
      out.threshold = largest_gap_threshold(series, ch, temp_c);
    }
  }
  out.decoded = rrwm::decode(series, out.threshold);
  double min_margin = std::numeric_limits<double>::infinity();
  for (const auto& rec : series.records) {
    min_margin = std::min(
        min_margin,
        std::abs(rec.mean_s(out.threshold.channel) - out.threshold.value_s));
  }
  out.min_margin_s = min_margin;
  return out;
}

Channel parse_channel(const std::string& name) {
  if (name == "set") return Channel::kSet;
  if (name == "reset") return Channel::kReset;
  throw Error(ErrorKind::kFormat, "unknown channel: " + name);
}

int cmd_new(const std::string& out_path, std::uint64_t cells,
            std::uint64_t seed, const std::vector<std::string>& overrides,
            bool force) {
  if (!force && std::filesystem::exists(out_path)) {
    throw Error(ErrorKind::kState,
                out_path + " already exists (use --force to overwrite)");
  }
  const Device dev = Device::create(cells, seed, model_with_overrides(overrides));
  dev.save(out_path);
  std::cout << "device=" << out_path << "\ncells=" << cells
            << "\nseed=" << seed << "\nbytes="
            << std::filesystem::file_size(out_path) << "\n";
  return kExitPass;
}

int cmd_characterize(const std::string& device_path, std::uint64_t start,
                     std::uint64_t count, std::uint64_t pairs,
                     std::uint64_t every, double temp_c,
                     const std::string& out_csv, const std::string& sweep_csv,
                     bool no_save) {
  Device dev = Device::load(device_path);
  rrwm::CharacterizeOptions opts;
  opts.pairs = pairs;
  opts.sample_every = every;
  opts.temp_c = temp_c;
  const MeasurementSeries series = rrwm::characterize(dev, start, count, opts);
  {
    std::ostringstream csv;
    rrwm::write_measurements_csv(csv, series);
    write_text_file(out_csv, csv.str());
  }
  if (!sweep_csv.empty()) {
    std::ostringstream csv;
    rrwm::stress_sweep_report(series, csv);
    write_text_file(sweep_csv, csv.str());
  }
  save_device(dev, device_path, no_save);
  std::cout << "records=" << series.records.size()
            << "\nsim_elapsed_s=" << fmt_g(dev.elapsed_s()) << "\n";
  return kExitPass;
}

int cmd_imprint(const std::string& device_path, const std::string& hex,
                std::uint64_t pairs, const LayoutOpts& layout_opts,
                double temp_c, const std::string& layout_out, bool no_save) {
  Device dev = Device::load(device_path);
  const std::vector<std::uint8_t> bits = rrwm::bits_from_hex(hex);
  const WatermarkLayout layout =
      layout_opts.resolve(static_cast<std::uint32_t>(bits.size()));
  rrwm::ImprintOptions opts;
  opts.pairs = pairs;
  opts.temp_c = temp_c;
  const rrwm::ImprintReport report = rrwm::imprint(dev, layout, bits, opts);
  save_device(dev, device_path, no_save);
  if (!layout_out.empty()) {
    std::ostringstream text;
    layout.write(text);
    write_text_file(layout_out, text.str());
  }
  std::cout << "watermark=" << hex << "\nbits=" << report.bits
            << "\npopcount=" << report.one_bits
            << "\npairs_per_one_bit=" << report.pairs_per_one_bit
            << "\ncell_pairs_applied=" << report.cell_pairs_applied
            << "\nsim_elapsed_s=" << fmt_g(report.sim_elapsed_s)
            << "\nformula_all_bits_s=" << fmt_g(report.formula_all_bits_s)
            << "\nformula_one_bits_s=" << fmt_g(report.formula_one_bits_s)
            << "\n";
  return kExitPass;
}

int cmd_extract(const std::string& device_path, const LayoutOpts& layout_opts,
                std::uint32_t bits_hint, const std::string& threshold_file,
                double temp_c, const std::string& out_csv, bool no_save) {
  Device dev = Device::load(device_path);
  const WatermarkLayout layout = layout_opts.resolve(bits_hint);
  const MeasurementSeries series = rrwm::extract(dev, layout, temp_c);
  save_device(dev, device_path, no_save);
  if (!out_csv.empty()) {
    std::ostringstream csv;
    rrwm::write_measurements_csv(csv, series);
    write_text_file(out_csv, csv.str());
  } else {
    rrwm::write_measurements_csv(std::cout, series);
  }
  if (!threshold_file.empty()) {
    const Threshold thr = rrwm::compensate_threshold(
        threshold_from_file(threshold_file), temp_c, dev.model());
    std::cout << "decoded=" << rrwm::hex_from_bits(rrwm::decode(series, thr))
              << "\n";
  }
  return kExitPass;
}

int cmd_calibrate(const std::string& device_path, std::uint64_t fresh_start,
                  std::uint64_t stressed_start, std::uint32_t groups,
                  std::uint32_t n_rep, std::uint64_t pairs,
                  const std::string& channel, double temp_c,
                  const std::string& out_path, bool no_save) {
  Device dev = Device::load(device_path);
  const WatermarkLayout fresh_layout =
      WatermarkLayout::contiguous(groups, fresh_start, n_rep);
  const WatermarkLayout stressed_layout =
      WatermarkLayout::contiguous(groups, stressed_start, n_rep);

  // Stress the calibration block exactly like a one-bit imprint.
  const std::vector<std::uint8_t> all_ones(groups, 1);
  rrwm::ImprintOptions opts;
  opts.pairs = pairs;
  opts.temp_c = temp_c;
  rrwm::imprint(dev, stressed_layout, all_ones, opts);

  const MeasurementSeries fresh = rrwm::extract(dev, fresh_layout, temp_c);
  const MeasurementSeries stressed = rrwm::extract(dev, stressed_layout, temp_c);
  const Threshold thr =
      rrwm::calibrate_threshold(fresh, stressed, parse_channel(channel), temp_c);
  save_device(dev, device_path, no_save);
  {
    std::ostringstream text;
    rrwm::write_threshold(text, thr);
    write_text_file(out_path, text.str());
  }
  std::cout << "channel=" << rrwm::channel_name(thr.channel)
            << "\nvalue_s=" << fmt_g(thr.value_s)
            << "\nmargin_s=" << fmt_g(thr.margin_s)
            << "\ntemp_c=" << fmt_g(thr.temp_c) << "\n";
  return kExitPass;
}

int cmd_verify(const std::string& device_path, const LayoutOpts& layout_opts,
               const std::string& expect_hex, const std::string& threshold_file,
               const std::string& channel, double temp_c, bool no_save) {
  Device dev = Device::load(device_path);
  const std::vector<std::uint8_t> expect = rrwm::bits_from_hex(expect_hex);
  const WatermarkLayout layout =
      layout_opts.resolve(static_cast<std::uint32_t>(expect.size()));
  const MeasurementSeries series = rrwm::extract(dev, layout, temp_c);
  save_device(dev, device_path, no_save);

  const VerifyOutcome outcome = run_verify(series, expect, threshold_file,
                                           parse_channel(channel), temp_c,
                                           dev.model());
  std::vector<std::uint32_t> mismatched;
  for (std::size_t i = 0; i < expect.size(); ++i) {
    if ((outcome.decoded[i] != 0) != (expect[i] != 0)) {
      mismatched.push_back(static_cast<std::uint32_t>(i));
    }
  }
  std::cout << "expected=" << expect_hex
            << "\ndecoded=" << rrwm::hex_from_bits(outcome.decoded)
            << "\nthreshold_s=" << fmt_g(outcome.threshold.value_s)
            << "\nmin_margin_s=" << fmt_g(outcome.min_margin_s)
            << "\nmismatched_bits=";
  for (std::size_t i = 0; i < mismatched.size(); ++i) {
    std::cout << (i ? " " : "") << mismatched[i];
  }
  std::cout << "\nverdict=" << (mismatched.empty() ? "PASS" : "FAIL") << "\n";
  return mismatched.empty() ? kExitPass : kExitFail;
}

int cmd_bake(const std::string& device_path, const LayoutOpts& layout_opts,
             const std::string& expect_hex, double bake_temp_c,
             double verify_temp_c, const std::string& out_set,
             const std::string& out_reset, bool no_save) {
  Device dev = Device::load(device_path);
  const std::vector<std::uint8_t> expect = rrwm::bits_from_hex(expect_hex);
  const WatermarkLayout layout =
      layout_opts.resolve(static_cast<std::uint32_t>(expect.size()));
  const rrwm::BakeReport report =
      rrwm::bake_and_verify(dev, layout, expect, bake_temp_c, verify_temp_c);
  save_device(dev, device_path, no_save);
  if (!out_set.empty()) {
    std::ostringstream csv;
    rrwm::write_separation_csv(csv, report.set_report);
    write_text_file(out_set, csv.str());
  }
  if (!out_reset.empty()) {
    std::ostringstream csv;
    rrwm::write_separation_csv(csv, report.reset_report);
    write_text_file(out_reset, csv.str());
  }
  const bool pass = report.set_report.separable && report.reset_report.separable;
  std::cout << "bake_temp_c=" << fmt_g(bake_temp_c)
            << "\nverify_temp_c=" << fmt_g(verify_temp_c)
            << "\nset_min_d_s=" << fmt_g(report.set_report.min_d_s)
            << "\nreset_min_d_s=" << fmt_g(report.reset_report.min_d_s)
            << "\nverdict=" << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitPass : kExitFail;
}

int cmd_report_estimates(double pairs, double bits, double t_pair_s,
                         double t_switch_s, double n_rep, double rated_pairs) {
  const rrwm::ImprintEstimate imp = rrwm::imprint_time_estimate(pairs, bits, t_pair_s);
  const rrwm::RetrievalEstimate ret =
      rrwm::retrieval_time_estimate(t_switch_s, bits, n_rep);
  const double cost = rrwm::endurance_cost(pairs, rated_pairs);
  std::cout << "imprint_time_s=" << fmt_g(imp.total_s)
            << "\nimprint_rate_bit_per_min=" << fmt_g(imp.rate_bit_per_min)
            << "\nretrieval_time_s=" << fmt_g(ret.total_s)
            << "\nretrieval_rate_bits_per_s=" << fmt_g(ret.rate_bits_per_s)
            << "\nendurance_cost_fraction=" << fmt_g(cost)
            << "\nendurance_cost_pct=" << fmt_g(100.0 * cost) << "\n";
  return kExitPass;
}

int cmd_report_separation(const std::vector<std::string>& devices,
                          const LayoutOpts& layout_opts,
                          const std::string& expect_hex,
                          const std::string& channel, double temp_c,
                          unsigned jobs, const std::string& csv_dir,
                          bool no_save) {
  if (devices.empty()) {
    throw Error(ErrorKind::kFormat, "no device files given");
  }
  const std::vector<std::uint8_t> expect = rrwm::bits_from_hex(expect_hex);
  const bool both = channel == "both";
  std::vector<std::string> lines(devices.size());
  std::vector<std::string> errors(devices.size());
  std::mutex fs_mutex;

  auto run_one = [&](std::size_t idx) {
    try {
      const std::string& path = devices[idx];
      Device dev = Device::load(path);
      const WatermarkLayout layout =
          layout_opts.resolve(static_cast<std::uint32_t>(expect.size()));
      const MeasurementSeries series = rrwm::extract(dev, layout, temp_c);
      save_device(dev, path, no_save);
      std::ostringstream out;
      for (Channel ch : {Channel::kSet, Channel::kReset}) {
        if (!both && ch != parse_channel(channel)) continue;
        const rrwm::SeparationReport rep = rrwm::separation(series, expect, ch);
        out << "device=" << path << " channel=" << rrwm::channel_name(ch)
            << " stress=" << rep.stress_pairs
            << " min_d_s=" << fmt_g(rep.min_d_s)
            << " separable=" << (rep.separable ? "true" : "false") << "\n";
        if (!csv_dir.empty()) {
          std::ostringstream csv;
          rrwm::write_separation_csv(csv, rep);
          const std::string name =
              std::filesystem::path(path).stem().string() + std::string("_") +
              rrwm::channel_name(ch) + ".csv";
          std::lock_guard<std::mutex> lock(fs_mutex);
          write_text_file((std::filesystem::path(csv_dir) / name).string(),
                          csv.str());
        }
      }
      lines[idx] = out.str();
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  };

  jobs = std::max(1u, jobs);
  if (jobs == 1 || devices.size() == 1) {
    for (std::size_t i = 0; i < devices.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex next_mutex;
    for (unsigned t = 0; t < std::min<std::size_t>(jobs, devices.size()); ++t) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t idx;
          {
            std::lock_guard<std::mutex> lock(next_mutex);
            if (next >= devices.size()) return;
            idx = next++;
          }
          run_one(idx);
        }
      });
    }
    for (std::thread& th : pool) th.join();
  }

  for (std::size_t i = 0; i < devices.size(); ++i) {
    if (!errors[i].empty()) {
      throw Error(ErrorKind::kState, devices[i] + ": " + errors[i]);
    }
    std::cout << lines[i];
  }
  return kExitPass;
}

int cmd_report_sweep(const std::string& in_csv, const std::string& out_csv) {
  std::ifstream in(in_csv);
  if (!in) throw Error(ErrorKind::kFormat, "cannot open " + in_csv);
  const MeasurementSeries series = rrwm::read_measurements_csv(in);
  std::ostringstream csv;
  rrwm::stress_sweep_report(series, csv);
  if (out_csv.empty()) std::cout << csv.str();
  else write_text_file(out_csv, csv.str());
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"behavioral ReRAM wear simulator and watermarking toolkit"};
  app.require_subcommand(1);

  // new
  auto* new_cmd = app.add_subcommand("new", "create a fresh device image");
  std::string new_out;
  std::uint64_t new_cells = rrwm::kDefaultCellCount;
  std::uint64_t new_seed = 1;
  std::vector<std::string> new_model;
  bool new_force = false;
  new_cmd->add_option("--out,-o", new_out, "output image path")->required();
  new_cmd->add_option("--cells", new_cells, "cell count")->default_val(rrwm::kDefaultCellCount);
  new_cmd->add_option("--seed", new_seed, "device seed")->envname("RRWM_SEED");
  new_cmd->add_option("--model", new_model, "model override key=value")->take_all();
  new_cmd->add_flag("--force", new_force, "overwrite an existing file");

  // characterize
  auto* char_cmd = app.add_subcommand("characterize", "wear sweep over fresh addresses");
  std::string char_device, char_out, char_sweep;
  std::uint64_t char_start = 0, char_count = 2048, char_pairs = 0, char_every = 1000;
  double char_temp = rrwm::kRefTempC;
  bool char_no_save = false;
  char_cmd->add_option("--device,-d", char_device)->required();
  char_cmd->add_option("--start", char_start, "first address");
  char_cmd->add_option("--count", char_count, "address count")->default_val(2048);
  char_cmd->add_option("--pairs", char_pairs, "total set-reset pairs")->required();
  char_cmd->add_option("--every", char_every, "pairs between samples")->default_val(1000);
  char_cmd->add_option("--temp", char_temp, "temperature in C");
  char_cmd->add_option("--out,-o", char_out, "measurements CSV")->required();
  char_cmd->add_option("--sweep-out", char_sweep, "per-level min/mean/max CSV");
  char_cmd->add_flag("--no-save", char_no_save, "do not persist device wear");

  // imprint
  auto* imp_cmd = app.add_subcommand("imprint", "stress a watermark into fresh cells");
  std::string imp_device, imp_hex, imp_layout_out;
  std::uint64_t imp_pairs = rrwm::kDefaultImprintPairs;
  double imp_temp = rrwm::kRefTempC;
  bool imp_no_save = false;
  LayoutOpts imp_layout;
  imp_cmd->add_option("--device,-d", imp_device)->required();
  imp_cmd->add_option("--watermark", imp_hex, "hex watermark")->required();
  imp_cmd->add_option("--pairs", imp_pairs, "stress pairs per one-bit")
      ->default_val(rrwm::kDefaultImprintPairs);
  imp_cmd->add_option("--temp", imp_temp, "temperature in C");
  imp_cmd->add_option("--layout-out", imp_layout_out, "write the layout used");
  imp_cmd->add_flag("--no-save", imp_no_save, "do not persist device wear");
  add_layout_opts(imp_cmd, imp_layout);

  // extract
  auto* ext_cmd = app.add_subcommand("extract", "measure averaged set/reset times per bit");
  std::string ext_device, ext_out, ext_threshold;
  double ext_temp = rrwm::kRefTempC;
  bool ext_no_save = false;
  LayoutOpts ext_layout;
  ext_cmd->add_option("--device,-d", ext_device)->required();
  ext_cmd->add_option("--out,-o", ext_out, "measurements CSV (stdout if omitted)");
  ext_cmd->add_option("--threshold", ext_threshold, "threshold file for decoding");
  ext_cmd->add_option("--temp", ext_temp, "temperature in C");
  ext_cmd->add_flag("--no-save", ext_no_save, "do not persist device wear");
  add_layout_opts(ext_cmd, ext_layout);

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "derive a decode threshold from scratch groups");
  std::string cal_device, cal_out, cal_channel = "set";
  std::uint64_t cal_fresh = 0, cal_stressed = 0, cal_pairs = rrwm::kDefaultImprintPairs;
  std::uint32_t cal_groups = 16, cal_n_rep = rrwm::kDefaultNRep;
  double cal_temp = rrwm::kRefTempC;
  bool cal_no_save = false;
  cal_cmd->add_option("--device,-d", cal_device)->required();
  cal_cmd->add_option("--fresh-start", cal_fresh, "first address of the fresh block")->required();
  cal_cmd->add_option("--stressed-start", cal_stressed, "first address of the block to stress")->required();
  cal_cmd->add_option("--groups", cal_groups, "groups per class")->default_val(16);
  cal_cmd->add_option("--n-rep", cal_n_rep)->default_val(rrwm::kDefaultNRep);
  cal_cmd->add_option("--pairs", cal_pairs, "stress pairs for the stressed block")
      ->default_val(rrwm::kDefaultImprintPairs);
  cal_cmd->add_option("--channel", cal_channel, "set or reset")->default_val("set");
  cal_cmd->add_option("--temp", cal_temp, "temperature in C");
  cal_cmd->add_option("--out,-o", cal_out, "threshold file")->required();
  cal_cmd->add_flag("--no-save", cal_no_save, "do not persist device wear");

  // verify
  auto* ver_cmd = app.add_subcommand("verify", "extract, decode and compare to an expected mark");
  std::string ver_device, ver_expect, ver_threshold, ver_channel = "set";
  double ver_temp = rrwm::kRefTempC;
  bool ver_no_save = false;
  LayoutOpts ver_layout;
  ver_cmd->add_option("--device,-d", ver_device)->required();
  ver_cmd->add_option("--expect", ver_expect, "expected hex watermark")->required();
  ver_cmd->add_option("--threshold", ver_threshold, "threshold file");
  ver_cmd->add_option("--channel", ver_channel, "set or reset")->default_val("set");
  ver_cmd->add_option("--temp", ver_temp, "temperature in C");
  ver_cmd->add_flag("--no-save", ver_no_save, "do not persist device wear");
  add_layout_opts(ver_cmd, ver_layout);

  // bake
  auto* bake_cmd = app.add_subcommand("bake", "verify watermark separation at temperature");
  std::string bake_device, bake_expect, bake_out_set, bake_out_reset;
  double bake_temp = 80.0, bake_verify_temp = 80.0;
  bool bake_no_save = false;
  LayoutOpts bake_layout;
  bake_cmd->add_option("--device,-d", bake_device)->required();
  bake_cmd->add_option("--expect", bake_expect, "expected hex watermark")->required();
  bake_cmd->add_option("--bake-temp", bake_temp, "bake temperature in C")->default_val(80.0);
  bake_cmd->add_option("--verify-temp", bake_verify_temp, "measurement temperature in C")
      ->default_val(80.0);
  bake_cmd->add_option("--out-set", bake_out_set, "set-channel separation CSV");
  bake_cmd->add_option("--out-reset", bake_out_reset, "reset-channel separation CSV");
  bake_cmd->add_flag("--no-save", bake_no_save, "do not persist device wear");
  add_layout_opts(bake_cmd, bake_layout);

  // report
  auto* rep_cmd = app.add_subcommand("report", "estimates, separation verdicts, sweep CSV");
  bool rep_estimates = false;
  bool rep_separation = false;
  std::string rep_sweep_in, rep_out, rep_expect, rep_channel = "both", rep_csv_dir;
  double rep_pairs = rrwm::kDefaultImprintPairs, rep_bits = rrwm::kDefaultWatermarkBits;
  double rep_t_pair = 0.01, rep_t_switch = 250e-6, rep_n_rep = rrwm::kDefaultNRep;
  double rep_rated = 500000.0, rep_temp = rrwm::kRefTempC;
  unsigned rep_jobs = 1;
  bool rep_no_save = false;
  std::vector<std::string> rep_devices;
  LayoutOpts rep_layout;
  rep_cmd->add_flag("--estimates", rep_estimates, "print analytic throughput/cost estimates");
  rep_cmd->add_flag("--separation", rep_separation, "per-device separation verdicts");
  rep_cmd->add_option("--sweep-csv", rep_sweep_in, "re-aggregate a measurements CSV");
  rep_cmd->add_option("--out,-o", rep_out, "output CSV for --sweep-csv");
  rep_cmd->add_option("--pairs", rep_pairs)->default_val(rrwm::kDefaultImprintPairs);
  rep_cmd->add_option("--bits", rep_bits)->default_val(rrwm::kDefaultWatermarkBits);
  rep_cmd->add_option("--t-pair", rep_t_pair, "buffered set+reset pair seconds")->default_val(0.01);
  rep_cmd->add_option("--t-switch", rep_t_switch, "averaged timed-write seconds")->default_val(250e-6);
  rep_cmd->add_option("--rep-n", rep_n_rep, "addresses per bit")->default_val(rrwm::kDefaultNRep);
  rep_cmd->add_option("--rated", rep_rated, "rated endurance pairs")->default_val(500000.0);
  rep_cmd->add_option("--expect", rep_expect, "expected hex watermark for --separation");
  rep_cmd->add_option("--channel", rep_channel, "set, reset or both")->default_val("both");
  rep_cmd->add_option("--temp", rep_temp, "temperature in C");
  rep_cmd->add_option("--jobs", rep_jobs, "parallelism across device files")->default_val(1);
  rep_cmd->add_option("--csv-dir", rep_csv_dir, "directory for per-device separation CSVs");
  rep_cmd->add_flag("--no-save", rep_no_save, "do not persist device wear");
  rep_cmd->add_option("devices", rep_devices, "device images for --separation");
  add_layout_opts(rep_cmd, rep_layout, /*with_bits=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitFormat;
  }

  try {
    if (new_cmd->parsed()) {
      return cmd_new(new_out, new_cells, new_seed, new_model, new_force);
    }
    if (char_cmd->parsed()) {
      return cmd_characterize(char_device, char_start, char_count, char_pairs,
                              char_every, char_temp, char_out, char_sweep,
                              char_no_save);
    }
    if (imp_cmd->parsed()) {
      return cmd_imprint(imp_device, imp_hex, imp_pairs, imp_layout, imp_temp,
                         imp_layout_out, imp_no_save);
    }
    if (ext_cmd->parsed()) {
      return cmd_extract(ext_device, ext_layout, ext_layout.bits, ext_threshold,
                         ext_temp, ext_out, ext_no_save);
    }
    if (cal_cmd->parsed()) {
      return cmd_calibrate(cal_device, cal_fresh, cal_stressed, cal_groups,
                           cal_n_rep, cal_pairs, cal_channel, cal_temp, cal_out,
                           cal_no_save);
    }
    if (ver_cmd->parsed()) {
      return cmd_verify(ver_device, ver_layout, ver_expect, ver_threshold,
                        ver_channel, ver_temp, ver_no_save);
    }
    if (bake_cmd->parsed()) {
      return cmd_bake(bake_device, bake_layout, bake_expect, bake_temp,
                      bake_verify_temp, bake_out_set, bake_out_reset,
                      bake_no_save);
    }
    if (rep_cmd->parsed()) {
      const int modes = int(rep_estimates) + int(rep_separation) +
                        int(!rep_sweep_in.empty());
      if (modes != 1) {
        throw Error(ErrorKind::kFormat,
                    "report needs exactly one of --estimates, --separation, "
                    "--sweep-csv");
      }
      if (rep_estimates) {
        return cmd_report_estimates(rep_pairs, rep_bits, rep_t_pair,
                                    rep_t_switch, rep_n_rep, rep_rated);
      }
      if (rep_separation) {
        if (rep_expect.empty()) {
          throw Error(ErrorKind::kFormat, "--separation requires --expect");
        }
        return cmd_report_separation(rep_devices, rep_layout, rep_expect,
                                     rep_channel, rep_temp, rep_jobs,
                                     rep_csv_dir, rep_no_save);
      }
      return cmd_report_sweep(rep_sweep_in, rep_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModel;
  }
  return kExitFormat;
}
