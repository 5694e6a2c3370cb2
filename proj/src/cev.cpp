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

#include "peakrate/cev.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "peakrate/error.hpp"

namespace peakrate {

namespace {

std::vector<double> concomitants(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ParameterError("X and Y differ in length");
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
  std::vector<double> out(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out[i] = x[order[i]];
  return out;
}

// Statistic over the first k concomitants, given those k values sorted.
double hillish_sorted(const std::vector<double>& xs, const std::vector<double>& sorted, std::size_t k) {
  const double lk = std::log(static_cast<double>(k));
  double sum = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    const auto r = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), xs[j - 1]) - sorted.begin());
    sum += (lk - std::log(r)) * (lk - std::log(static_cast<double>(j)));
  }
  return sum / static_cast<double>(k);
}

void check_k(std::size_t k, std::size_t n) {
  if (k < 1) throw ParameterError("Hillish needs k >= 1");
  if (k > n) throw ParameterError("Hillish needs k <= n");
}

}  // namespace

double hillish(std::span<const double> x, std::span<const double> y, std::size_t k) {
  check_k(k, x.size());
  auto xs = concomitants(x, y);
  std::vector<double> sorted(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(sorted.begin(), sorted.end());
  return hillish_sorted(xs, sorted, k);
}

HillishCurve hillish_curve(std::span<const double> x, std::span<const double> y,
                           std::span<const std::size_t> ks, std::string pair_label) {
  HillishCurve curve;
  curve.n = x.size();
  curve.pair_label = std::move(pair_label);
  for (std::size_t k : ks) check_k(k, curve.n);
  auto xs = concomitants(x, y);

  std::vector<std::size_t> order(ks.begin(), ks.end());
  std::sort(order.begin(), order.end());
  std::vector<double> sorted;
  sorted.reserve(order.empty() ? 0 : order.back());
  std::vector<double> values(order.size());
  std::size_t grown = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (; grown < order[i]; ++grown) {
      sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), xs[grown]), xs[grown]);
    }
    values[i] = hillish_sorted(xs, sorted, order[i]);
  }
  // Report in the caller's order.
  for (std::size_t k : ks) {
    const auto pos = static_cast<std::size_t>(std::lower_bound(order.begin(), order.end(), k) - order.begin());
    curve.points.push_back({k, values[pos]});
  }
  return curve;
}

StabilityReport hillish_stability(const HillishCurve& curve, const StabilityConfig& cfg) {
  if (!(cfg.window_fraction > 0.0)) throw ParameterError("window fraction must be positive");
  auto pts = curve.points;
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
  const auto width = static_cast<std::size_t>(std::ceil(cfg.window_fraction * static_cast<double>(curve.n)));
  StabilityReport report;
  report.best.relative_range = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t k_end = pts[i].k + width - 1;
    if (pts.back().k < k_end) break;
    double lo = pts[i].hillish;
    double hi = lo;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = i; j < pts.size() && pts[j].k <= k_end; ++j) {
      lo = std::min(lo, pts[j].hillish);
      hi = std::max(hi, pts[j].hillish);
      sum += pts[j].hillish;
      ++count;
    }
    const double mean = sum / static_cast<double>(count);
    const double range = mean != 0.0 ? (hi - lo) / std::fabs(mean) : std::numeric_limits<double>::infinity();
    StabilityWindow w{pts[i].k, k_end, range};
    report.windows.push_back(w);
    if (range < report.best.relative_range) report.best = w;
  }
  report.stable = report.best.relative_range < cfg.max_relative_range;
  return report;
}

}  // namespace peakrate
