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
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace peakrate {

// ---------------------------------------------------------------------------
// Hill estimation
// ---------------------------------------------------------------------------

struct HillEstimate {
  double gamma = 0.0;
  double se = 0.0;  // gamma / sqrt(k)
};

struct HillPoint {
  std::size_t k = 0;
  double gamma = 0.0;
  double se = 0.0;
};

struct HillCurve {
  std::size_t n = 0;
  std::vector<HillPoint> points;
};

// Hill estimator from the k largest order statistics, 1 <= k <= n-1.
// Requires a strictly positive sample.
HillEstimate hill(std::span<const double> sample, std::size_t k);

// Hill plot data; sorts the sample once and evaluates every requested k.
HillCurve hill_curve(std::span<const double> sample, std::span<const std::size_t> ks);

// Inclusive integer range [lo, hi] with the given stride.
std::vector<std::size_t> k_range(std::size_t lo, std::size_t hi, std::size_t step = 1);

// ---------------------------------------------------------------------------
// Peaks over threshold with a generalized Pareto model
// ---------------------------------------------------------------------------

struct GpdFit {
  double gamma = 0.0;      // shape
  double beta = 0.0;       // scale
  double threshold = 0.0;  // Y_{n-k:n}
  std::size_t k = 0;
  double loglik = 0.0;
  // (empirical, theoretical) pairs on the exp(1) scale.
  std::vector<std::pair<double, double>> qq_points;
  // Pearson correlation over qq_points.
  double qq_correlation = 0.0;
};

// Quantile of GPD(gamma, beta): beta((1-p)^(-gamma) - 1)/gamma.
double gpd_quantile(double p, double gamma, double beta);

// log(1 + gamma z / beta) / gamma, which is exp(1) distributed when
// z ~ GPD(gamma, beta). Uses the series branch for |gamma| < 1e-6.
double gpd_exp_transform(double z, double gamma, double beta);

// GPD log-likelihood of nonnegative excesses; -inf outside the support.
double gpd_loglik(std::span<const double> excesses, double gamma, double beta);

// Maximum-likelihood GPD fit to the k excesses over Y_{n-k:n}. The shape is
// found by profiling over theta = gamma/beta (both gamma and beta then have
// closed forms) on a bracketing grid, refined by Brent's method. Shapes
// below -1 are excluded since the likelihood is unbounded there. Throws
// ConvergenceError with the profile trace when no interior maximum exists.
GpdFit gpd_fit_excesses(std::span<const double> sample, std::size_t k);

// ---------------------------------------------------------------------------
// Extreme-value-condition test (gamma >= 0 corollary) with Monte Carlo
// p-values
// ---------------------------------------------------------------------------

struct McConfig {
  std::size_t replications = 10000;  // N
  std::size_t grid = 2000;           // Brownian path points m
  std::optional<std::uint64_t> seed;  // mandatory
};

// Independent draws of the limit law of the test statistic, kept sorted.
struct EvLimitSample {
  McConfig config;
  std::vector<double> sorted_draws;

  // Fraction of draws strictly greater than the statistic.
  double p_value(double statistic) const;
  // Empirical quantile (type 7 interpolation).
  double quantile(double p) const;
  double mean() const;
};

// One draw of the limit functional from a Brownian path sampled at
// t = 1/m, 2/m, ..., 1 (path[i] = W((i+1)/m)); both integrals by the
// trapezoid rule on that grid.
double ev_limit_functional(std::span<const double> path);

// N draws; replication r uses its own RNG stream derived from (seed, r).
// Requires grid >= 1000 and replications >= 1000.
EvLimitSample simulate_ev_limit(const McConfig& mc);

enum class GammaEstimator { Hill, Mle };

// Test statistic k * int_0^1 ((log Y_{n-[kt]:n} - log Y_{n-k:n})/gamma + log t)^2 t^2 dt
// with an explicit gamma, integrated exactly piece by piece.
double ev_statistic(std::span<const double> sample, std::size_t k, double gamma);

struct EvTestPoint {
  std::size_t k = 0;
  double gamma = 0.0;  // estimate used in the statistic
  double statistic = 0.0;
  double p_value = 0.0;
};

struct EvTestCurve {
  std::size_t n = 0;
  McConfig mc;
  std::vector<EvTestPoint> points;
};

// Evaluates the statistic for each k against the shared reference sample.
// gamma comes from hill() or, with GammaEstimator::Mle, from the GPD fit
// of the same k excesses (k >= 10, positive shape required).
EvTestCurve ev_condition_test(std::span<const double> sample, std::span<const std::size_t> ks,
                              const EvLimitSample& reference,
                              GammaEstimator estimator = GammaEstimator::Hill);

// 1/(x_F - y) with x_F = max(sample) + 1/n_prime.
std::vector<double> weibull_transform(std::span<const double> sample, double n_prime = 1e6);

// Re-test for a finite right endpoint: ev_condition_test on weibull_transform(sample).
EvTestCurve weibull_alternative_test(std::span<const double> sample,
                                     std::span<const std::size_t> ks,
                                     const EvLimitSample& reference, double n_prime = 1e6,
                                     GammaEstimator estimator = GammaEstimator::Hill);

}  // namespace peakrate
