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
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "peakrate/ingest.hpp"

namespace peakrate {

// First differences of the session start times after sorting them.
std::vector<double> interarrivals(std::span<const double> starts);
std::vector<double> interarrivals(std::span<const Session> sessions);

struct ExpQQ {
  double lambda_hat = 0.0;
  std::vector<std::pair<double, double>> qq_points;  // (empirical, exponential quantile)
  double qq_correlation = 0.0;
};

// Exponential QQ data: the i-th order statistic against
// -log(1 - i/(n+1)) / lambda_hat, lambda_hat = 1/mean. Needs >= 20 values.
ExpQQ exp_qq(std::span<const double> deltas);

struct AcfTest {
  std::vector<std::pair<std::size_t, double>> acf;  // lags 0..max_lag
  double bound = 0.0;                               // z_{1-alpha/2} / sqrt(n)
  std::size_t max_lag = 0;
  std::size_t spikes = 0;
  double spike_fraction = 0.0;  // over lags 1..max_lag
  double alpha = 0.05;
};

// Sample autocorrelations and the share of lags outside the two-sided
// independence bands. max_lag defaults to n - 1.
AcfTest acf_test(std::span<const double> deltas, std::optional<std::size_t> max_lag = {}, double alpha = 0.05);

struct PoissonDiagnostics {
  double lambda_hat = 0.0;
  std::vector<std::pair<double, double>> qq_points;
  double qq_correlation = 0.0;
  std::vector<std::pair<std::size_t, double>> acf;
  double bound = 0.0;
  std::size_t spikes = 0;
  double spike_fraction = 0.0;
};

PoissonDiagnostics poisson_diagnostics(std::span<const Session> group, std::optional<std::size_t> max_lag = {},
                                       double alpha = 0.05);

}  // namespace peakrate
