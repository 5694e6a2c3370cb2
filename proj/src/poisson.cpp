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

#include "peakrate/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "peakrate/error.hpp"

namespace peakrate {

std::vector<double> interarrivals(std::span<const double> starts) {
  if (starts.size() < 2) throw DataError("interarrivals need at least two sessions");
  std::vector<double> s(starts.begin(), starts.end());
  std::sort(s.begin(), s.end());
  std::vector<double> d(s.size() - 1);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) d[i] = s[i + 1] - s[i];
  return d;
}

std::vector<double> interarrivals(std::span<const Session> sessions) {
  std::vector<double> starts;
  starts.reserve(sessions.size());
  for (const auto& s : sessions) starts.push_back(s.gamma_start);
  return interarrivals(starts);
}

ExpQQ exp_qq(std::span<const double> deltas) {
  const std::size_t n = deltas.size();
  if (n < 20) throw DataError("exponential QQ needs at least 20 interarrivals");
  std::vector<double> sorted(deltas.begin(), deltas.end());
  std::sort(sorted.begin(), sorted.end());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  if (!(mean > 0.0)) throw DataError("interarrivals are all zero");
  ExpQQ out;
  out.lambda_hat = 1.0 / mean;
  out.qq_points.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double p = static_cast<double>(i) / static_cast<double>(n + 1);
    out.qq_points.emplace_back(sorted[i - 1], -std::log1p(-p) / out.lambda_hat);
  }
  double mx = 0.0, my = 0.0;
  for (const auto& [a, b] : out.qq_points) {
    mx += a;
    my += b;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& [a, b] : out.qq_points) {
    sxy += (a - mx) * (b - my);
    sxx += (a - mx) * (a - mx);
    syy += (b - my) * (b - my);
  }
  out.qq_correlation = sxx > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
  return out;
}

AcfTest acf_test(std::span<const double> deltas, std::optional<std::size_t> max_lag, double alpha) {
  const std::size_t n = deltas.size();
  if (n < 2) throw DataError("autocorrelation needs at least two interarrivals");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  const std::size_t lags = max_lag.value_or(n - 1);
  if (lags < 1 || lags > n - 1) throw ParameterError("max_lag must lie in [1, n - 1]");
  const double mean = std::accumulate(deltas.begin(), deltas.end(), 0.0) / static_cast<double>(n);
  std::vector<double> c(n);
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = deltas[i] - mean;
    denom += c[i] * c[i];
  }
  if (!(denom > 0.0)) throw DataError("interarrivals have zero variance");

  AcfTest out;
  out.alpha = alpha;
  out.max_lag = lags;
  boost::math::normal_distribution<double> z;
  out.bound = boost::math::quantile(z, 1.0 - alpha / 2.0) / std::sqrt(static_cast<double>(n));
  out.acf.reserve(lags + 1);
  out.acf.emplace_back(0, 1.0);
  for (std::size_t h = 1; h <= lags; ++h) {
    double num = 0.0;
    for (std::size_t i = 0; i + h < n; ++i) num += c[i] * c[i + h];
    const double rho = num / denom;
    out.acf.emplace_back(h, rho);
    if (std::fabs(rho) > out.bound) ++out.spikes;
  }
  out.spike_fraction = static_cast<double>(out.spikes) / static_cast<double>(lags);
  return out;
}

PoissonDiagnostics poisson_diagnostics(std::span<const Session> group, std::optional<std::size_t> max_lag,
                                       double alpha) {
  const auto d = interarrivals(group);
  auto qq = exp_qq(d);
  auto acf = acf_test(d, max_lag, alpha);
  PoissonDiagnostics out;
  out.lambda_hat = qq.lambda_hat;
  out.qq_points = std::move(qq.qq_points);
  out.qq_correlation = qq.qq_correlation;
  out.acf = std::move(acf.acf);
  out.bound = acf.bound;
  out.spikes = acf.spikes;
  out.spike_fraction = acf.spike_fraction;
  return out;
}

}  // namespace peakrate
