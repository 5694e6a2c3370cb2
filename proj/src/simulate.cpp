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

#include "peakrate/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "peakrate/error.hpp"
#include "peakrate/parallel.hpp"
#include "peakrate/poisson.hpp"
#include "peakrate/random.hpp"
#include "peakrate/segmentation.hpp"
#include "peakrate/spectral.hpp"
#include "peakrate/tail_stats.hpp"

namespace peakrate {

namespace {

// Quantile of a sorted table at probability u in (0, 1), linear between
// order statistics.
double table_quantile(const std::vector<double>& sorted, double u) {
  const double pos = u * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

// Replaces values by the table quantile at their rank / (n + 1).
void map_by_rank(std::vector<double>& values, const std::vector<double>& table) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    out[order[r]] = table_quantile(table, static_cast<double>(r + 1) / static_cast<double>(n + 1));
  }
  values = std::move(out);
}

struct GroupDraws {
  std::vector<double> start, rpeak, psi, theta, radius, size, duration;
};

}  // namespace

void validate(const SimulationSpec& spec) {
  if (spec.q < 1) throw ParameterError("simulation needs q >= 1");
  if (spec.rpeak_source.empty()) throw ParameterError("R^v source sample is empty");
  if (spec.rpeak_source.size() < spec.q) throw ParameterError("R^v source smaller than q");
  for (double r : spec.rpeak_source) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("R^v source values must be positive and finite");
  }
  if (spec.lambdas.size() != spec.q) throw ParameterError("need one Poisson rate per group");
  for (double l : spec.lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ParameterError("Poisson rates must be positive");
  }
  if (!(spec.radial_gamma > 0.0)) throw ParameterError("radial_gamma must be positive");
  if (!(spec.radial_scale > 0.0)) throw ParameterError("radial_scale must be positive");
  if (!std::isfinite(spec.beta0) || !std::isfinite(spec.beta1)) throw ParameterError("trend coefficients must be finite");
  if (spec.horizon_seconds.has_value() == spec.horizon_sessions.has_value()) {
    throw ParameterError("give exactly one horizon: seconds or session count");
  }
  if (spec.horizon_seconds && !(*spec.horizon_seconds > 0.0)) throw ParameterError("horizon must be positive");
  if (spec.horizon_sessions && *spec.horizon_sessions == 0) throw ParameterError("session count must be positive");
  if (spec.backtransform) {
    if (spec.backtransform->size() != spec.q) throw ParameterError("need one marginal table per group");
    for (const auto& t : *spec.backtransform) {
      if (t.size.empty() || t.duration.empty()) throw ParameterError("marginal tables must be nonempty");
      if (!std::is_sorted(t.size.begin(), t.size.end()) || !std::is_sorted(t.duration.begin(), t.duration.end())) {
        throw ParameterError("marginal tables must be sorted");
      }
    }
  }
}

SimulationOutput simulate_sessions(const SimulationSpec& spec) {
  validate(spec);
  const std::size_t q = spec.q;
  double horizon = 0.0;
  if (spec.horizon_seconds) {
    horizon = *spec.horizon_seconds;
  } else {
    const double total = std::accumulate(spec.lambdas.begin(), spec.lambdas.end(), 0.0);
    horizon = static_cast<double>(*spec.horizon_sessions) / total;
  }

  // Step 1 on stream 0: resample the R^v pool and split it by rank.
  const std::size_t n_src = spec.rpeak_source.size();
  std::vector<double> pool(n_src);
  {
    Rng rng = make_stream(spec.seed, 0);
    std::uniform_int_distribution<std::size_t> pick(0, n_src - 1);
    for (auto& r : pool) r = spec.rpeak_source[pick(rng)];
  }
  std::sort(pool.begin(), pool.end());
  std::vector<std::vector<double>> pools(q);
  for (std::size_t g = 0; g < q; ++g) {
    const std::size_t lo = g * n_src / q;
    const std::size_t hi = (g + 1) * n_src / q;
    pools[g].assign(pool.begin() + static_cast<std::ptrdiff_t>(lo), pool.begin() + static_cast<std::ptrdiff_t>(hi));
  }

  std::vector<GroupDraws> draws(q);
  parallel_for(q, [&](std::size_t g) {
    Rng rng = make_stream(spec.seed, g + 1);
    auto& d = draws[g];
    const auto& rp = pools[g];
    std::uniform_int_distribution<std::size_t> pick(0, rp.size() - 1);
    for (double t = exponential(rng, spec.lambdas[g]); t <= horizon; t += exponential(rng, spec.lambdas[g])) {
      d.start.push_back(t);
      const double r = rp[pick(rng)];
      d.rpeak.push_back(r);
      const double psi = half_logit(spec.beta0 + spec.beta1 * std::log(r));
      d.psi.push_back(psi);
      d.theta.push_back(psi > 0.0 ? sample_logistic_exact(std::min(psi, 0.5), rng) : 0.5);
      d.radius.push_back(pareto(rng, spec.radial_gamma, spec.radial_scale));
    }
    const std::size_t n = d.start.size();
    d.size.resize(n);
    d.duration.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      d.size[i] = d.radius[i] * d.theta[i];
      d.duration[i] = d.radius[i] * (1.0 - d.theta[i]);
      // Keep S + D == N exact in floating point.
      d.radius[i] = d.size[i] + d.duration[i];
    }
    if (spec.backtransform && n > 0) {
      map_by_rank(d.size, (*spec.backtransform)[g].size);
      map_by_rank(d.duration, (*spec.backtransform)[g].duration);
    }
  });

  struct Ref {
    double start;
    std::size_t g;
    std::size_t i;
  };
  std::vector<Ref> refs;
  for (std::size_t g = 0; g < q; ++g) {
    for (std::size_t i = 0; i < draws[g].start.size(); ++i) refs.push_back({draws[g].start[i], g, i});
  }
  std::stable_sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) { return a.start < b.start; });

  SimulationOutput out;
  out.horizon = horizon;
  out.sessions.reserve(refs.size());
  for (const auto& ref : refs) {
    const auto& d = draws[ref.g];
    Session s;
    s.key = {"sim", "g" + std::to_string(ref.g + 1)};
    s.gamma_start = d.start[ref.i];
    s.size = d.size[ref.i];
    s.duration = d.duration[ref.i];
    s.rate = s.size / s.duration;
    s.peak_rate = d.rpeak[ref.i];
    s.packets = 0;
    out.sessions.push_back(std::move(s));
    out.group.push_back(ref.g + 1);
    out.psi.push_back(d.psi[ref.i]);
    out.theta.push_back(d.theta[ref.i]);
    out.radius.push_back(d.radius[ref.i]);
  }
  return out;
}

SimulationSpec spec_from_sessions(std::span<const Session> sessions, std::size_t q) {
  SimulationSpec spec;
  spec.q = q;
  for (const auto& s : sessions) spec.rpeak_source.push_back(s.peak_rate);
  auto groups = split_by_quantiles(sessions, q, Predictor::PeakRate);
  std::vector<double> radii;
  for (const auto& g : groups) {
    spec.lambdas.push_back(exp_qq(interarrivals(g.sessions)).lambda_hat);
    const std::size_t n = g.sessions.size();
    std::vector<double> s(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = g.sessions[i].size;
      d[i] = g.sessions[i].duration;
    }
    const std::size_t k = std::max<std::size_t>(1, n / 10);
    for (const auto& p : antirank_polar(s, d, k).points) radii.push_back(p.radius);
  }
  const std::size_t kh = std::max<std::size_t>(10, radii.size() / 20);
  if (kh >= radii.size()) throw DataError("too few sessions to estimate the radial index");
  spec.radial_gamma = hill(radii, kh).gamma;
  return spec;
}

}  // namespace peakrate
