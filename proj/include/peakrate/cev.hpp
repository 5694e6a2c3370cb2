// Copyright 2026 The peakrate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace peakrate {

// Hillish statistic of (X, Y) at k: sort by Y descending (ties keep input
// order), take the concomitants X*_j, rank each among the first k with
// r*_{j,k} = #{l <= k : X*_l <= X*_j}, and average
// log(k/r*_{j,k}) log(k/j) over j = 1..k. Defined for 1 <= k <= n; k = 1
// always gives 0.
double hillish(std::span<const double> x, std::span<const double> y, std::size_t k);

struct HillishPoint {
  std::size_t k = 0;
  double hillish = 0.0;
};

struct HillishCurve {
  std::size_t n = 0;
  std::vector<HillishPoint> points;
  std::string pair_label;  // e.g. "R|S" for X = R, Y = S
};

// Hillish at each k in ks (each within [1, n]). The Y ordering is computed
// once and the sorted X prefix is grown incrementally.
HillishCurve hillish_curve(std::span<const double> x, std::span<const double> y,
                           std::span<const std::size_t> ks, std::string pair_label = {});

struct StabilityConfig {
  double window_fraction = 0.1;      // window width in k, as a fraction of n
  double max_relative_range = 0.05;  // (max - min) / |mean| inside a window
};

struct StabilityWindow {
  std::size_t k_start = 0;
  std::size_t k_end = 0;
  double relative_range = 0.0;
};

struct StabilityReport {
  std::vector<StabilityWindow> windows;  // sliding windows fully inside the curve
  bool stable = false;                   // some window under the threshold
  StabilityWindow best;                  // window with the smallest range
};

// Sliding-window relative range of a Hillish curve. A window starting at
// curve point i covers every point with k in [k_i, k_i + w), w = ceil(f n).
StabilityReport hillish_stability(const HillishCurve& curve, const StabilityConfig& cfg = {});

}  // namespace peakrate
