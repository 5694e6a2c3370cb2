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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "peakrate/ingest.hpp"
#include "peakrate/random.hpp"

namespace peakrate {

// Angles are clamped into [kAngleEps, 1 - kAngleEps] before any likelihood
// evaluation; the logistic density is unbounded or zero at the endpoints.
inline constexpr double kAngleEps = 1e-6;

// ---------------------------------------------------------------------------
// Antirank standardization and L1 polar coordinates
// ---------------------------------------------------------------------------

struct AngularPoint {
  double radius = 0.0;  // N = k/r1 + k/r2
  double theta = 0.0;   // k/r1 / N
};

struct AngularSample {
  std::size_t k = 0;
  std::vector<AngularPoint> points;    // one per input pair, input order
  std::vector<std::size_t> retained;  // indices with radius > 1

  std::vector<double> retained_angles() const;
};

// Antiranks r = #{l : X_l >= X_i} per margin, Z = (k/r1, k/r2), then polar
// coordinates under the L1 norm. Requires n >= k >= 1.
AngularSample antirank_polar(std::span<const double> x, std::span<const double> y, std::size_t k);

// ---------------------------------------------------------------------------
// Symmetric logistic spectral density
// ---------------------------------------------------------------------------

// h(t; psi) for psi in (0, 1). At t in {0, 1} the analytic limit is
// returned: 0 for psi < 1/2, +inf for psi > 1/2, and 1/2 at psi = 1/2.
double logistic_density(double t, double psi);

// log h(t; psi) for t strictly inside (0, 1).
double logistic_log_density(double t, double psi);

// Sum of log h over the angles (each clamped first).
double logistic_loglik(std::span<const double> angles, double psi);

// First and second derivative of log h(t; psi) with respect to psi.
struct LogDensityDerivs {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};
LogDensityDerivs logistic_log_density_derivs(double t, double psi);

struct LogisticFit {
  double psi = 0.0;
  std::size_t k = 0;  // threshold used, when known
  double loglik = 0.0;
  std::size_t n_retained = 0;
  bool degenerate = false;  // maximizer pinned at the lower bound
};

// Maximum likelihood over psi in (eps, 1 - eps): coarse grid then Brent.
// Needs at least 10 angles.
LogisticFit logistic_mle(std::span<const double> angles);

// ---------------------------------------------------------------------------
// Peak-rate-indexed trend psi = g(beta0 + beta1 log R^v)
// ---------------------------------------------------------------------------

// g(x) = 0.5 / (1 + e^-x), confining psi to (0, 1/2).
double half_logit(double x);
double half_logit_inverse(double psi);

// Retained angles of one group, each paired with the log peak rate of the
// session it came from.
struct TrendGroup {
  std::vector<double> angles;
  std::vector<double> log_peak_rate;
  std::size_t k = 0;
  double median_log_peak_rate = 0.0;  // over all sessions of the group
};

// Antirank/polar transform of (S, D) within one group and collection of the
// retained angles with their sessions' log R^v.
TrendGroup make_trend_group(std::span<const Session> sessions, std::size_t k);

enum class TrendOptimizer { Newton, NestedBrent };

struct TrendOptions {
  bool fix_slope_zero = false;
  TrendOptimizer optimizer = TrendOptimizer::Newton;
};

struct TrendFit {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double se_beta0 = std::numeric_limits<double>::quiet_NaN();
  double se_beta1 = std::numeric_limits<double>::quiet_NaN();
  double loglik = 0.0;
  std::size_t B = 0;  // bootstrap replications (0 if none)
  std::size_t m = 0;  // bootstrap sample size
  std::size_t dropped = 0;
  std::size_t iterations = 0;
  TrendOptimizer optimizer = TrendOptimizer::Newton;
};

double trend_loglik(std::span<const TrendGroup> groups, double beta0, double beta1);

// Pooled maximum likelihood for (beta0, beta1). A coarse grid in centred,
// scaled coordinates seeds either a damped Newton iteration (default,
// analytic gradient and Hessian) or nested one-dimensional Brent searches.
// Newton falls back to the nested search if it stalls. Requires at least two
// groups with 10 or more angles (one group suffices with fix_slope_zero).
TrendFit fit_trend(std::span<const TrendGroup> groups, const TrendOptions& opts = {});

// Sample standard deviation with the B-1 divisor.
double sample_sd(std::span<const double> values);

struct BootstrapConfig {
  std::size_t m = 0;               // resample size, m < n
  std::size_t B = 1000;            // replications, >= 100
  std::size_t q = 10;              // groups
  std::vector<std::size_t> ks;     // per-group k from the original fit (size q, or 1 to broadcast)
  std::uint64_t seed = 0;
};

struct BootstrapResult {
  double se_beta0 = 0.0;
  double se_beta1 = 0.0;
  std::vector<double> beta0;  // successful replications, replication order
  std::vector<double> beta1;
  std::size_t dropped = 0;
};

// m-out-of-n bootstrap of the whole trend pipeline: resample sessions,
// re-segment by R^v, antirank within groups with the original k values,
// refit. Replication b draws from RNG stream (seed, b). Replications that
// fail are dropped; more than 5% drops raise ConvergenceError.
BootstrapResult bootstrap_trend_se(std::span<const Session> sessions, const BootstrapConfig& cfg);

// ---------------------------------------------------------------------------
// Sampling from the logistic spectral law
// ---------------------------------------------------------------------------

// Inverse-CDF sampler. Works in the rescaled logit coordinate
// v = logit(t)/psi, where the law has O(1) width for every psi (it tends to
// the standard logistic as psi -> 0). The CDF of v is tabulated on 4096
// knots by adaptive Gauss-Kronrod quadrature and inverted by monotone
// (piecewise linear) interpolation.
class LogisticSampler {
 public:
  static constexpr std::size_t kKnots = 4096;

  explicit LogisticSampler(double psi);

  double psi() const { return psi_; }
  // Draw in (0, 1); endpoints are rejected and redrawn.
  double sample(Rng& rng) const;
  // Tabulated CDF at angle t.
  double cdf(double t) const;

 private:
  double psi_;
  std::vector<double> knots_;  // v values
  std::vector<double> cdf_;    // normalized cumulative mass at knots
};

std::vector<double> sample_logistic(double psi, std::size_t count, std::uint64_t seed);

// Exact draw from the mixture representation of the logistic model:
// pick a coordinate uniformly, give it a Gamma(1 - psi) variable and the
// other an Exp(1), then theta = 1 / (1 + (E1/E2)^psi).
double sample_logistic_exact(double psi, Rng& rng);

// Logistic function evaluated without overflow.
inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace peakrate
