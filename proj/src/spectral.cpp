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

#include "peakrate/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "peakrate/error.hpp"
#include "peakrate/parallel.hpp"
#include "peakrate/segmentation.hpp"

namespace peakrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBrentBits = std::numeric_limits<double>::digits / 2;

// log(2 cosh y)
double log2cosh(double y) {
  const double a = std::fabs(y);
  return a + std::log1p(std::exp(-2.0 * a));
}

double clamp_angle(double t) { return std::clamp(t, kAngleEps, 1.0 - kAngleEps); }

double logit(double t) { return std::log(t) - std::log1p(-t); }

// log h in terms of x = logit(t):
//   log((1-psi)/(2 psi)) + 3 log2cosh(x/2) + (psi-2) log2cosh(x/(2 psi)).
// The powers of t and 1-t cancel analytically, so no O(1/psi) terms remain.
double log_density_logit(double x, double psi, double log_norm) {
  return log_norm + 3.0 * log2cosh(0.5 * x) + (psi - 2.0) * log2cosh(0.5 * x / psi);
}

double log_norm(double psi) { return std::log((1.0 - psi) / (2.0 * psi)); }

LogDensityDerivs derivs_logit(double x, double psi) {
  const double y = 0.5 * x / psi;
  const double th = std::tanh(y);
  const double u = y * th;
  const double lc = log2cosh(y);
  LogDensityDerivs d;
  d.value = log_norm(psi) + 3.0 * log2cosh(0.5 * x) + (psi - 2.0) * lc;
  d.d1 = -1.0 / (1.0 - psi) - 1.0 / psi + lc - (psi - 2.0) * u / psi;
  d.d2 = -1.0 / ((1.0 - psi) * (1.0 - psi)) + 1.0 / (psi * psi) - u / psi - 2.0 * u / (psi * psi) +
         (1.0 - 2.0 / psi) * (th + y * (1.0 - th * th)) * y / psi;
  return d;
}

void check_psi(double psi) {
  if (!(psi > 0.0 && psi < 1.0)) throw ParameterError("psi must lie in (0, 1)");
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> AngularSample::retained_angles() const {
  std::vector<double> out;
  out.reserve(retained.size());
  for (std::size_t i : retained) out.push_back(points[i].theta);
  return out;
}

AngularSample antirank_polar(std::span<const double> x, std::span<const double> y, std::size_t k) {
  const std::size_t n = x.size();
  if (y.size() != n) throw ParameterError("margins differ in length");
  if (k < 1 || k > n) throw ParameterError("antirank scale k must satisfy 1 <= k <= n");
  auto antiranks = [n](std::span<const double> v) {
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      // #{l : v_l >= v_i}
      auto lb = std::lower_bound(sorted.begin(), sorted.end(), v[i]);
      r[i] = n - static_cast<std::size_t>(lb - sorted.begin());
    }
    return r;
  };
  const auto r1 = antiranks(x);
  const auto r2 = antiranks(y);
  AngularSample out;
  out.k = k;
  out.points.resize(n);
  const double kd = static_cast<double>(k);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = kd / static_cast<double>(r1[i]);
    const double z2 = kd / static_cast<double>(r2[i]);
    const double radius = z1 + z2;
    out.points[i] = {radius, z1 / radius};
    if (radius > 1.0) out.retained.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------

double logistic_log_density(double t, double psi) {
  check_psi(psi);
  if (!(t > 0.0 && t < 1.0)) throw ParameterError("angle must lie strictly inside (0, 1)");
  return log_density_logit(logit(t), psi, log_norm(psi));
}

double logistic_density(double t, double psi) {
  check_psi(psi);
  if (t < 0.0 || t > 1.0) return 0.0;
  if (t == 0.0 || t == 1.0) {
    if (psi < 0.5) return 0.0;
    if (psi > 0.5) return kInf;
    return 0.5;
  }
  return std::exp(logistic_log_density(t, psi));
}

double logistic_loglik(std::span<const double> angles, double psi) {
  check_psi(psi);
  const double ln = log_norm(psi);
  double ll = 0.0;
  for (double t : angles) ll += log_density_logit(logit(clamp_angle(t)), psi, ln);
  return ll;
}

LogDensityDerivs logistic_log_density_derivs(double t, double psi) {
  check_psi(psi);
  return derivs_logit(logit(clamp_angle(t)), psi);
}

LogisticFit logistic_mle(std::span<const double> angles) {
  if (angles.size() < 10) throw DataError("logistic fit needs at least 10 angles");
  std::vector<double> xs(angles.size());
  for (std::size_t i = 0; i < angles.size(); ++i) xs[i] = logit(clamp_angle(angles[i]));
  auto negll = [&](double psi) {
    const double ln = log_norm(psi);
    double ll = 0.0;
    for (double x : xs) ll += log_density_logit(x, psi, ln);
    return -ll;
  };

  const double lo = kAngleEps;
  const double hi = 1.0 - kAngleEps;
  std::vector<double> grid{lo, 1e-5, 1e-4, 1e-3, 5e-3};
  for (int i = 1; i <= 49; ++i) grid.push_back(0.02 * i);
  grid.insert(grid.end(), {0.99, 0.999, hi});
  std::size_t best = 0;
  double best_val = kInf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = negll(grid[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = grid[best == 0 ? 0 : best - 1];
  const double b = grid[std::min(best + 1, grid.size() - 1)];
  auto [psi, val] = boost::math::tools::brent_find_minima(negll, a, b, kBrentBits);
  if (!(val <= best_val)) {
    psi = grid[best];
    val = best_val;
  }
  LogisticFit fit;
  fit.psi = psi;
  fit.loglik = -val;
  fit.n_retained = angles.size();
  if (psi <= 2.0 * lo) {
    fit.degenerate = true;
    fit.psi = lo;
    fit.loglik = -negll(lo);
  }
  return fit;
}

// ---------------------------------------------------------------------------

double half_logit(double x) { return 0.5 * logistic(x); }

double half_logit_inverse(double psi) {
  if (!(psi > 0.0 && psi < 0.5)) throw ParameterError("half-logit inverse needs psi in (0, 0.5)");
  const double p = 2.0 * psi;
  return std::log(p) - std::log1p(-p);
}

TrendGroup make_trend_group(std::span<const Session> sessions, std::size_t k) {
  const std::size_t n = sessions.size();
  std::vector<double> s(n), d(n), lr(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = sessions[i].size;
    d[i] = sessions[i].duration;
    if (!(sessions[i].peak_rate > 0.0)) throw DataError("peak rate must be positive");
    lr[i] = std::log(sessions[i].peak_rate);
  }
  auto polar = antirank_polar(s, d, k);
  TrendGroup g;
  g.k = k;
  for (std::size_t i : polar.retained) {
    g.angles.push_back(polar.points[i].theta);
    g.log_peak_rate.push_back(lr[i]);
  }
  std::vector<double> sorted = lr;
  std::sort(sorted.begin(), sorted.end());
  g.median_log_peak_rate = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return g;
}

namespace {

// Pooled angle data in centred/scaled coordinates: eta = a + c * z with
// z = (log R - centre) / scale; beta1 = c / scale, beta0 = a - beta1 centre.
struct TrendData {
  std::vector<double> x;  // logit of clamped angle
  std::vector<double> z;
  double centre = 0.0;
  double scale = 1.0;
};

struct TrendEval {
  double f = 0.0;
  std::array<double, 2> grad{};
  std::array<double, 3> hess{};  // aa, ac, cc
};

double trend_value(const TrendData& d, double a, double c) {
  double f = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const double psi = half_logit(a + c * d.z[i]);
    if (!(psi > 0.0)) return -kInf;
    f += log_density_logit(d.x[i], psi, log_norm(psi));
  }
  return f;
}

TrendEval trend_eval(const TrendData& d, double a, double c) {
  TrendEval e;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const double psi = half_logit(a + c * d.z[i]);
    const auto ld = derivs_logit(d.x[i], psi);
    const double g1 = psi * (1.0 - 2.0 * psi);
    const double g2 = g1 * (1.0 - 4.0 * psi);
    const double d1 = ld.d1 * g1;
    const double d2 = ld.d2 * g1 * g1 + ld.d1 * g2;
    const double z = d.z[i];
    e.f += ld.value;
    e.grad[0] += d1;
    e.grad[1] += d1 * z;
    e.hess[0] += d2;
    e.hess[1] += d2 * z;
    e.hess[2] += d2 * z * z;
  }
  return e;
}

// Maximizes f over [lo, hi] from a coarse grid, then Brent.
template <typename F>
std::pair<double, double> maximize_1d(F&& f, double lo, double hi, double step) {
  double best_x = lo;
  double best = -kInf;
  for (double x = lo; x <= hi + 1e-12; x += step) {
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  auto neg = [&](double x) { return -f(x); };
  auto [x, v] = boost::math::tools::brent_find_minima(neg, best_x - step, best_x + step, kBrentBits);
  if (-v >= best) return {x, -v};
  return {best_x, best};
}

bool newton(const TrendData& d, double& a, double& c, double& f, std::size_t& iters,
            ConvergenceError::Trace& trace) {
  f = trend_value(d, a, c);
  for (iters = 0; iters < 200; ++iters) {
    const auto e = trend_eval(d, a, c);
    const double gnorm = std::max(std::fabs(e.grad[0]), std::fabs(e.grad[1]));
    if (gnorm < 1e-9 * std::max(1.0, std::fabs(f))) return true;
    const double scale = std::fabs(e.hess[0]) + std::fabs(e.hess[2]) + 1.0;
    double mu = 0.0;
    bool stepped = false;
    for (int tries = 0; tries < 80; ++tries) {
      // Solve (-H + mu I) delta = grad.
      const double A00 = -e.hess[0] + mu;
      const double A01 = -e.hess[1];
      const double A11 = -e.hess[2] + mu;
      const double det = A00 * A11 - A01 * A01;
      if (!(A00 > 0.0) || !(det > 0.0)) {
        mu = mu > 0 ? 4.0 * mu : 1e-6 * scale;
        continue;
      }
      const double da = (A11 * e.grad[0] - A01 * e.grad[1]) / det;
      const double dc = (A00 * e.grad[1] - A01 * e.grad[0]) / det;
      const double fn = trend_value(d, a + da, c + dc);
      trace.emplace_back(c + dc, fn);
      const double step = std::max(std::fabs(da), std::fabs(dc));
      if (fn >= f) {
        a += da;
        c += dc;
        const bool done = step < 1e-10 || fn - f <= 1e-14 * std::max(1.0, std::fabs(f));
        f = fn;
        stepped = true;
        if (done) return true;
        break;
      }
      if (step < 1e-12) return true;
      mu = mu > 0 ? 4.0 * mu : 1e-6 * scale;
    }
    if (!stepped) return false;
  }
  return false;
}

void nested_brent(const TrendData& d, double& a, double& c, double& f) {
  double a_best = a;
  auto profile = [&](double cc) {
    auto [aa, v] = maximize_1d([&](double x) { return trend_value(d, x, cc); }, a - 4.0, a + 4.0, 0.5);
    a_best = aa;
    return v;
  };
  auto [c_hat, v] = maximize_1d(profile, c - 1.5, c + 1.5, 0.25);
  profile(c_hat);
  a = a_best;
  c = c_hat;
  f = v;
}

}  // namespace

double trend_loglik(std::span<const TrendGroup> groups, double beta0, double beta1) {
  double f = 0.0;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.angles.size(); ++i) {
      const double psi = half_logit(beta0 + beta1 * g.log_peak_rate[i]);
      f += log_density_logit(logit(clamp_angle(g.angles[i])), psi, log_norm(psi));
    }
  }
  return f;
}

TrendFit fit_trend(std::span<const TrendGroup> groups, const TrendOptions& opts) {
  const std::size_t min_groups = opts.fix_slope_zero ? 1 : 2;
  if (groups.size() < min_groups) throw DataError("trend fit needs at least two groups");
  TrendData d;
  for (const auto& g : groups) {
    if (g.angles.size() != g.log_peak_rate.size()) throw ParameterError("group arrays differ in length");
    if (g.angles.size() < 10) throw DataError("every group needs at least 10 retained angles");
    for (std::size_t i = 0; i < g.angles.size(); ++i) {
      d.x.push_back(logit(clamp_angle(g.angles[i])));
      d.z.push_back(g.log_peak_rate[i]);
    }
  }
  const double n = static_cast<double>(d.z.size());
  d.centre = std::accumulate(d.z.begin(), d.z.end(), 0.0) / n;
  double var = 0.0;
  for (double z : d.z) var += (z - d.centre) * (z - d.centre);
  d.scale = std::sqrt(var / n);
  if (!opts.fix_slope_zero && !(d.scale > 0.0)) throw DataError("log peak rates have no spread");
  if (!(d.scale > 0.0)) d.scale = 1.0;
  for (double& z : d.z) z = (z - d.centre) / d.scale;

  TrendFit fit;
  fit.optimizer = opts.optimizer;
  double a = 0.0, c = 0.0, f = -kInf;
  if (opts.fix_slope_zero) {
    std::tie(a, f) = maximize_1d([&](double x) { return trend_value(d, x, 0.0); }, -20.0, 20.0, 0.25);
  } else {
    for (double ga = -6.0; ga <= 6.0; ga += 1.5) {
      for (double gc : {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0}) {
        const double v = trend_value(d, ga, gc);
        if (v > f) {
          f = v;
          a = ga;
          c = gc;
        }
      }
    }
    if (!std::isfinite(f)) throw ConvergenceError("trend likelihood is not finite on the start grid");
    ConvergenceError::Trace trace;
    bool ok = false;
    if (opts.optimizer == TrendOptimizer::Newton) {
      double a1 = a, c1 = c, f1 = f;
      ok = newton(d, a1, c1, f1, fit.iterations, trace);
      if (ok) {
        a = a1;
        c = c1;
        f = f1;
      } else {
        fit.optimizer = TrendOptimizer::NestedBrent;
      }
    }
    if (!ok) nested_brent(d, a, c, f);
    if (!std::isfinite(f)) throw ConvergenceError("trend fit did not converge", std::move(trace));
  }
  fit.beta1 = c / d.scale;
  fit.beta0 = a - fit.beta1 * d.centre;
  fit.loglik = f;
  return fit;
}

double sample_sd(std::span<const double> values) {
  const std::size_t b = values.size();
  if (b < 2) throw DataError("standard deviation needs at least two values");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(b);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(b - 1));
}

BootstrapResult bootstrap_trend_se(std::span<const Session> sessions, const BootstrapConfig& cfg) {
  const std::size_t n = sessions.size();
  if (!(cfg.m > 0 && cfg.m < n)) throw ParameterError("bootstrap size m must satisfy 0 < m < n");
  if (cfg.B < 100) throw ParameterError("bootstrap needs B >= 100 replications");
  if (cfg.q < 2) throw ParameterError("bootstrap needs q >= 2 groups");
  if (cfg.ks.size() != cfg.q && cfg.ks.size() != 1) {
    throw ParameterError("need one k per group (or a single k for all groups)");
  }

  struct Rep {
    bool ok = false;
    double b0 = 0.0;
    double b1 = 0.0;
  };
  std::vector<Rep> reps(cfg.B);
  parallel_for(cfg.B, [&](std::size_t b) {
    Rng rng = make_stream(cfg.seed, b);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<Session> resample;
    resample.reserve(cfg.m);
    for (std::size_t i = 0; i < cfg.m; ++i) resample.push_back(sessions[pick(rng)]);
    try {
      auto groups = split_by_quantiles(resample, cfg.q, Predictor::PeakRate);
      std::vector<TrendGroup> tg;
      tg.reserve(cfg.q);
      for (std::size_t g = 0; g < cfg.q; ++g) {
        const std::size_t k = cfg.ks.size() == 1 ? cfg.ks[0] : cfg.ks[g];
        tg.push_back(make_trend_group(groups[g].sessions, k));
      }
      auto fit = fit_trend(tg);
      reps[b] = {true, fit.beta0, fit.beta1};
    } catch (const Error&) {
      reps[b].ok = false;
    }
  });

  BootstrapResult out;
  for (const auto& r : reps) {
    if (!r.ok) {
      ++out.dropped;
      continue;
    }
    out.beta0.push_back(r.b0);
    out.beta1.push_back(r.b1);
  }
  if (static_cast<double>(out.dropped) > 0.05 * static_cast<double>(cfg.B)) {
    throw ConvergenceError(std::to_string(out.dropped) + " of " + std::to_string(cfg.B) +
                           " bootstrap replications failed");
  }
  out.se_beta0 = sample_sd(out.beta0);
  out.se_beta1 = sample_sd(out.beta1);
  return out;
}

}  // namespace peakrate
