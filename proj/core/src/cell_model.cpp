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

#include "rrwm/cell_model.hpp"

#include <cmath>

namespace rrwm {

namespace {

double saturating_growth(double x, double p) {
  if (x <= 0.0) return 0.0;
  double xp;
  if (p == 4.0) {
    const double x2 = x * x;
    xp = x2 * x2;
  } else if (p == 2.0) {
    xp = x * x;
  } else if (p == 1.0) {
    xp = x;
  } else {
    xp = std::pow(x, p);
  }
  return xp / (1.0 + xp);
}

}  // namespace

bool apply_stress_pair(CellState& cell) {
  if (cell.failed()) return false;
  cell.wear_sixteenths += 16u;
  return true;
}

TimingModel TimingModel::calibrated_defaults() {
  TimingModel m;
  m.t_set_fresh_s = 220e-6;
  m.t_reset_fresh_s = 200e-6;
  m.growth_exponent = 4.0;
  m.growth_half_pairs = 20000.0;
  m.temp_coeff_per_c = 0.001;
  m.meas_noise_sigma = 0.03;
  m.cell_spread = 0.10;
  m.block_spread = 0.04;
  m.rated_endurance_pairs = 500000.0;
  m.buffered_write_s = 5e-3;
  m.verify_only_s = 20e-6;
  m.timeout_s = 5e-3;

  // Solve the amplitudes from the worst-case crossing condition
  //   (1 - spread) * (1 + A * g(n_cross / n_half)) = 1 + spread.
  const double gap = 2.0 * m.cell_spread / (1.0 - m.cell_spread);
  m.set_growth_amplitude =
      gap / saturating_growth(kSetCrossingPairs / m.growth_half_pairs,
                              m.growth_exponent);
  m.reset_growth_amplitude =
      gap / saturating_growth(kResetCrossingPairs / m.growth_half_pairs,
                              m.growth_exponent);
  return m;
}

double TimingModel::wear_growth(double pairs, Channel ch) const {
  const double amplitude = ch == Channel::kSet ? set_growth_amplitude
                                               : reset_growth_amplitude;
  return amplitude *
         saturating_growth(pairs / growth_half_pairs, growth_exponent);
}

double TimingModel::time_s(const CellState& cell, Channel ch, double temp_c,
                           NoiseStream* rng) const {
  if (cell.failed()) {
    throw Error(ErrorKind::kCellFailed,
                "timed write on a failed cell (endurance exhausted)");
  }
  const double fresh = ch == Channel::kSet ? t_set_fresh_s : t_reset_fresh_s;
  double t = fresh *
             (1.0 + wear_growth(static_cast<double>(cell.stress_pairs()), ch)) *
             cell.variation * temp_factor(temp_c);
  if (rng != nullptr && meas_noise_sigma != 0.0) {
    t *= 1.0 + meas_noise_sigma * rng->next_gaussian();
  }
  return t;
}

}  // namespace rrwm
