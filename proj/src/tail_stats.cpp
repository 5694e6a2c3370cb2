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

#include "peakrate/tail_stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "peakrate/error.hpp"
#include "peakrate/parallel.hpp"
#include "peakrate/random.hpp"

namespace peakrate {

namespace {

// Logs of the sample sorted in descending order: out[j] = log Y_{n-j:n}.
std::vector<double> descending_logs(std::span<const double> sample) {
  std::vector<double> logs(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (!(sample[i] > 0.0) || !std::isfinite(sample[i])) {
      throw DataError("sample must be finite and strictly positive");
    }
    logs[i] = std::log(sample[i]);
  }
  std::sort(logs.begin(), logs.end(), std::greater<>());
  return logs;
}

void check_k(std::size_t k, std::size_t n) {
  if (k < 1 || k + 1 > n) {
    throw ParameterError("k = " + std::to_string(k) + " outside [1, n-1] for n = " +
                         std::to_string(n));
  }
}

double pearson(const std::vector<std::pair<double, double>>& pts) {
  const double n = static_cast<double>(pts.size());
  if (pts.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
    sxy += (x - mx) * (y - my);
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

HillEstimate hill(std::span<const double> sample, std::size_t k) {
  check_k(k, sample.size());
  auto logs = descending_logs(sample);
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) sum += logs[j] - logs[k];
  const double g = sum / static_cast<double>(k);
  return {g, g / std::sqrt(static_cast<double>(k))};
}

HillCurve hill_curve(std::span<const double> sample, std::span<const std::size_t> ks) {
  auto logs = descending_logs(sample);
  HillCurve curve;
  curve.n = sample.size();
  std::vector<double> prefix(logs.size() + 1, 0.0);
  for (std::size_t j = 0; j < logs.size(); ++j) prefix[j + 1] = prefix[j] + logs[j];
  for (std::size_t k : ks) {
    check_k(k, curve.n);
    const double kd = static_cast<double>(k);
    const double g = (prefix[k] - kd * logs[k]) / kd;
    curve.points.push_back({k, g, g / std::sqrt(kd)});
  }
  return curve;
}

std::vector<std::size_t> k_range(std::size_t lo, std::size_t hi, std::size_t step) {
  if (step == 0) throw ParameterError("k step must be positive");
  std::vector<std::size_t> out;
  for (std::size_t k = lo; k <= hi; k += step) out.push_back(k);
  return out;
}

// ---------------------------------------------------------------------------

double gpd_quantile(double p, double gamma, double beta) {
  if (!(p >= 0.0 && p < 1.0)) throw ParameterError("GPD quantile needs p in [0, 1)");
  if (!(beta > 0.0)) throw ParameterError("GPD scale must be positive");
  if (std::fabs(gamma) < 1e-12) return -beta * std::log1p(-p);
  return beta * std::expm1(-gamma * std::log1p(-p)) / gamma;
}

double gpd_exp_transform(double z, double gamma, double beta) {
  const double x = gamma * z / beta;
  if (std::fabs(gamma) < 1e-6) return (z / beta) * (1.0 - 0.5 * x + x * x / 3.0);
  return std::log1p(x) / gamma;
}

double gpd_loglik(std::span<const double> excesses, double gamma, double beta) {
  if (!(beta > 0.0)) return -std::numeric_limits<double>::infinity();
  double ll = -static_cast<double>(excesses.size()) * std::log(beta);
  for (double z : excesses) {
    const double x = gamma * z / beta;
    if (!(1.0 + x > 0.0)) return -std::numeric_limits<double>::infinity();
    if (std::fabs(gamma) < 1e-12) {
      ll -= z / beta;
    } else {
      ll -= (1.0 + 1.0 / gamma) * std::log1p(x);
    }
  }
  return ll;
}

namespace {

struct ProfilePoint {
  double gamma;
  double beta;
  double loglik;
};

// Profile likelihood at theta = gamma/beta.
ProfilePoint gpd_profile(std::span<const double> z, double theta, double mean_z) {
  const double kd = static_cast<double>(z.size());
  if (theta == 0.0) return {0.0, mean_z, -kd * (std::log(mean_z) + 1.0)};
  double s = 0.0;
  for (double v : z) {
    const double a = 1.0 + theta * v;
    if (!(a > 0.0)) return {0, 0, -std::numeric_limits<double>::infinity()};
    s += std::log1p(theta * v);
  }
  const double g = s / kd;
  const double b = g / theta;
  if (!(b > 0.0) || g < -1.0) return {g, b, -std::numeric_limits<double>::infinity()};
  return {g, b, -kd * (std::log(b) + g + 1.0)};
}

}  // namespace

GpdFit gpd_fit_excesses(std::span<const double> sample, std::size_t k) {
  const std::size_t n = sample.size();
  if (k < 10) throw ParameterError("GPD fit needs k >= 10");
  check_k(k, n);
  std::vector<double> sorted(sample.begin(), sample.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw DataError("sample contains non-finite values");
  }
  std::sort(sorted.begin(), sorted.end());
  const double u = sorted[n - k - 1];
  std::vector<double> z(k);
  for (std::size_t i = 0; i < k; ++i) z[i] = sorted[n - k + i] - u;
  const double zmax = z.back();
  const double mean_z = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(k);
  if (!(zmax > 0.0)) throw DataError("all excesses are zero; GPD fit undefined");

  // Grid over s = theta * zmax; s > -1 keeps every excess in the support.
  std::vector<double> grid;
  for (double e = 8.0; e >= 0.1; e -= 0.1) grid.push_back(-(1.0 - std::pow(10.0, -e)));
  for (double e = 0.0; e >= -8.0; e -= 0.25) grid.push_back(-std::pow(10.0, e) * 0.5);
  grid.push_back(0.0);
  for (double e = -8.0; e <= 12.0; e += 0.1) grid.push_back(std::pow(10.0, e));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  ConvergenceError::Trace trace;
  std::size_t best = 0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto pp = gpd_profile(z, grid[i] / zmax, mean_z);
    trace.emplace_back(pp.gamma, pp.loglik);
    if (pp.loglik > best_ll) {
      best_ll = pp.loglik;
      best = i;
    }
  }
  if (!std::isfinite(best_ll) || best == 0 || best + 1 == grid.size()) {
    throw ConvergenceError("GPD profile likelihood has no interior maximum", std::move(trace));
  }

  auto neg = [&](double s) { return -gpd_profile(z, s / zmax, mean_z).loglik; };
  auto [s_hat, neg_ll] =
      boost::math::tools::brent_find_minima(neg, grid[best - 1], grid[best + 1], 52);
  if (-neg_ll < best_ll) s_hat = grid[best];
  auto pp = gpd_profile(z, s_hat / zmax, mean_z);
  if (!std::isfinite(pp.loglik) || !(pp.beta > 0.0)) {
    throw ConvergenceError("GPD refinement left the feasible region", std::move(trace));
  }

  GpdFit fit;
  fit.gamma = pp.gamma;
  fit.beta = pp.beta;
  fit.threshold = u;
  fit.k = k;
  fit.loglik = gpd_loglik(z, pp.gamma, pp.beta);
  std::vector<double> e(k);
  for (std::size_t i = 0; i < k; ++i) e[i] = gpd_exp_transform(z[i], fit.gamma, fit.beta);
  std::sort(e.begin(), e.end());
  fit.qq_points.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double p = static_cast<double>(i + 1) / static_cast<double>(k + 1);
    fit.qq_points.emplace_back(e[i], -std::log1p(-p));
  }
  fit.qq_correlation = pearson(fit.qq_points);
  return fit;
}

// ---------------------------------------------------------------------------

double EvLimitSample::p_value(double statistic) const {
  if (sorted_draws.empty()) throw DataError("empty reference sample");
  auto it = std::upper_bound(sorted_draws.begin(), sorted_draws.end(), statistic);
  return static_cast<double>(sorted_draws.end() - it) / static_cast<double>(sorted_draws.size());
}

double EvLimitSample::quantile(double p) const {
  if (sorted_draws.empty()) throw DataError("empty reference sample");
  const double h = p * static_cast<double>(sorted_draws.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted_draws.size() - 1);
  return sorted_draws[lo] + (h - static_cast<double>(lo)) * (sorted_draws[hi] - sorted_draws[lo]);
}

double EvLimitSample::mean() const {
  return std::accumulate(sorted_draws.begin(), sorted_draws.end(), 0.0) /
         static_cast<double>(sorted_draws.size());
}

double ev_limit_functional(std::span<const double> path) {
  const std::size_t m = path.size();
  if (m < 2) throw ParameterError("Brownian path needs at least two grid points");
  const double h = 1.0 / static_cast<double>(m);
  const double w1 = path[m - 1];
  auto t_at = [&](std::size_t i) { return static_cast<double>(i + 1) * h; };

  double inner = 0.0;
  double prev = path[0] / t_at(0) - w1;
  for (std::size_t i = 1; i < m; ++i) {
    const double cur = path[i] / t_at(i) - w1;
    inner += 0.5 * (prev + cur) * h;
    prev = cur;
  }
  auto outer_integrand = [&](std::size_t i) {
    const double t = t_at(i);
    const double v = path[i] / t - w1 + std::log(t) * inner;
    return v * v * t * t;
  };
  double outer = 0.0;
  double prev_o = outer_integrand(0);
  for (std::size_t i = 1; i < m; ++i) {
    const double cur = outer_integrand(i);
    outer += 0.5 * (prev_o + cur) * h;
    prev_o = cur;
  }
  return outer;
}

EvLimitSample simulate_ev_limit(const McConfig& mc) {
  if (!mc.seed) throw ParameterError("Monte Carlo seed is required");
  if (mc.grid < 1000) throw ParameterError("Brownian grid must have at least 1000 points");
  if (mc.replications < 1000) throw ParameterError("need at least 1000 replications");
  EvLimitSample out;
  out.config = mc;
  out.sorted_draws.resize(mc.replications);
  const double step_sd = std::sqrt(1.0 / static_cast<double>(mc.grid));
  parallel_for(mc.replications, [&](std::size_t r) {
    Rng rng = make_stream(*mc.seed, r);
    std::normal_distribution<double> normal(0.0, step_sd);
    std::vector<double> path(mc.grid);
    double w = 0.0;
    for (auto& p : path) {
      w += normal(rng);
      p = w;
    }
    out.sorted_draws[r] = ev_limit_functional(path);
  });
  std::sort(out.sorted_draws.begin(), out.sorted_draws.end());
  return out;
}

namespace {

// Exact piecewise integral; logs[j] = log Y_{n-j:n} in descending order.
double ev_statistic_sorted(const std::vector<double>& logs, std::size_t k, double gamma) {
  if (!(gamma != 0.0) || !std::isfinite(gamma)) {
    throw DataError("shape estimate is zero or non-finite; statistic undefined");
  }
  // Primitives of t^2, t^2 log t and t^2 log^2 t (all vanish at t = 0).
  auto prim = [](double t, double& f0, double& f1, double& f2) {
    if (t <= 0.0) {
      f0 = f1 = f2 = 0.0;
      return;
    }
    const double t3 = t * t * t;
    const double lt = std::log(t);
    f0 = t3 / 3.0;
    f1 = t3 * lt / 3.0 - t3 / 9.0;
    f2 = t3 * lt * lt / 3.0 - 2.0 * t3 * lt / 9.0 + 2.0 * t3 / 27.0;
  };
  const double kd = static_cast<double>(k);
  double a0 = 0, a1 = 0, a2 = 0;
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double b0, b1, b2;
    prim(static_cast<double>(j + 1) / kd, b0, b1, b2);
    // On [j/k, (j+1)/k) the floor [kt] equals j.
    const double c = (logs[j] - logs[k]) / gamma;
    total += c * c * (b0 - a0) + 2.0 * c * (b1 - a1) + (b2 - a2);
    a0 = b0;
    a1 = b1;
    a2 = b2;
  }
  return kd * total;
}

double estimate_gamma(std::span<const double> sample, const std::vector<double>& logs,
                      std::size_t k, GammaEstimator est) {
  if (est == GammaEstimator::Hill) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += logs[j] - logs[k];
    return sum / static_cast<double>(k);
  }
  auto fit = gpd_fit_excesses(sample, k);
  if (!(fit.gamma > 0.0)) throw DataError("ML shape estimate is not positive at k = " + std::to_string(k));
  return fit.gamma;
}

}  // namespace

double ev_statistic(std::span<const double> sample, std::size_t k, double gamma) {
  check_k(k, sample.size());
  return ev_statistic_sorted(descending_logs(sample), k, gamma);
}

EvTestCurve ev_condition_test(std::span<const double> sample, std::span<const std::size_t> ks,
                              const EvLimitSample& reference, GammaEstimator estimator) {
  auto logs = descending_logs(sample);
  EvTestCurve curve;
  curve.n = sample.size();
  curve.mc = reference.config;
  for (std::size_t k : ks) {
    check_k(k, curve.n);
    EvTestPoint pt;
    pt.k = k;
    pt.gamma = estimate_gamma(sample, logs, k, estimator);
    pt.statistic = ev_statistic_sorted(logs, k, pt.gamma);
    pt.p_value = reference.p_value(pt.statistic);
    curve.points.push_back(pt);
  }
  return curve;
}

std::vector<double> weibull_transform(std::span<const double> sample, double n_prime) {
  if (sample.empty()) throw DataError("empty sample");
  if (!(n_prime > 0.0)) throw ParameterError("n' must be positive");
  // x_F - y evaluated as (max - y) + 1/n' so that the maximum maps to n'.
  const double top = *std::max_element(sample.begin(), sample.end());
  std::vector<double> out(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double gap = (top - sample[i]) + 1.0 / n_prime;
    if (!(gap > 0.0) || !std::isfinite(gap)) {
      throw DataError("endpoint transform produced a nonpositive value; increase 1/n'");
    }
    out[i] = 1.0 / gap;
  }
  return out;
}

EvTestCurve weibull_alternative_test(std::span<const double> sample,
                                     std::span<const std::size_t> ks,
                                     const EvLimitSample& reference, double n_prime,
                                     GammaEstimator estimator) {
  auto transformed = weibull_transform(sample, n_prime);
  return ev_condition_test(transformed, ks, reference, estimator);
}

}  // namespace peakrate
