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

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "peakrate/error.hpp"
#include "peakrate/spectral.hpp"

namespace peakrate {

namespace {

double log2cosh(double y) {
  const double a = std::fabs(y);
  return a + std::log1p(std::exp(-2.0 * a));
}

// Log density of v = logit(theta)/psi.
double log_density_v(double v, double psi) {
  return std::log(0.5 * (1.0 - psi)) + log2cosh(0.5 * psi * v) + (psi - 2.0) * log2cosh(0.5 * v);
}

}  // namespace

LogisticSampler::LogisticSampler(double psi) : psi_(psi) {
  if (!(psi > 0.0 && psi < 1.0)) throw ParameterError("psi must lie in (0, 1)");
  // Tails decay like exp(-(1 - psi)|v|); the cut leaves mass below e^-40.
  const double half_width = 40.0 / (1.0 - psi);
  knots_.resize(kKnots);
  cdf_.assign(kKnots, 0.0);
  const double h = 2.0 * half_width / static_cast<double>(kKnots - 1);
  for (std::size_t i = 0; i < kKnots; ++i) knots_[i] = -half_width + h * static_cast<double>(i);
  auto f = [psi](double v) { return std::exp(log_density_v(v, psi)); };
  using Quad = boost::math::quadrature::gauss_kronrod<double, 15>;
  for (std::size_t i = 1; i < kKnots; ++i) {
    cdf_[i] = cdf_[i - 1] + Quad::integrate(f, knots_[i - 1], knots_[i], 8, 1e-13);
  }
  const double total = cdf_.back();
  for (double& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

double LogisticSampler::sample(Rng& rng) const {
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double u = open_uniform(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    i = std::clamp<std::size_t>(i, 1, kKnots - 1);
    const double c0 = cdf_[i - 1];
    const double c1 = cdf_[i];
    const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    const double v = knots_[i - 1] + frac * (knots_[i] - knots_[i - 1]);
    const double t = logistic(psi_ * v);
    if (t > 0.0 && t < 1.0) return t;
  }
  throw DataError("logistic sampler kept producing endpoint angles");
}

double LogisticSampler::cdf(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double v = (std::log(t) - std::log1p(-t)) / psi_;
  if (v <= knots_.front()) return 0.0;
  if (v >= knots_.back()) return 1.0;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), v);
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
  const double frac = (v - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
  return cdf_[i - 1] + frac * (cdf_[i] - cdf_[i - 1]);
}

std::vector<double> sample_logistic(double psi, std::size_t count, std::uint64_t seed) {
  LogisticSampler sampler(psi);
  Rng rng = make_stream(seed, 0);
  std::vector<double> out(count);
  for (auto& t : out) t = sampler.sample(rng);
  return out;
}

double sample_logistic_exact(double psi, Rng& rng) {
  if (!(psi > 0.0 && psi < 1.0)) throw ParameterError("psi must lie in (0, 1)");
  std::gamma_distribution<double> tilted(1.0 - psi, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const bool first = (rng() & 1u) != 0;
    const double g = tilted(rng);
    const double e = exponential(rng);
    const double e1 = first ? g : e;
    const double e2 = first ? e : g;
    // theta = 1 / (1 + (e1/e2)^psi)
    const double t = logistic(psi * (std::log(e2) - std::log(e1)));
    if (t > 0.0 && t < 1.0) return t;
  }
  throw DataError("logistic sampler kept producing endpoint angles");
}

}  // namespace peakrate
