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

#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "peakrate/error.hpp"
#include "peakrate/poisson.hpp"
#include "peakrate/segmentation.hpp"
#include "peakrate/simulate.hpp"
#include "peakrate/spectral.hpp"
#include "peakrate/tail_stats.hpp"
#include "support.hpp"

namespace peakrate {
namespace {

SimulationSpec base_spec() {
  SimulationSpec spec;
  spec.q = 3;
  for (int i = 1; i <= 300; ++i) spec.rpeak_source.push_back(100.0 * i);
  spec.lambdas = {0.5, 1.0, 2.0};
  spec.beta0 = -1.4;
  spec.beta1 = 0.3;
  spec.radial_gamma = 1.0;
  spec.horizon_seconds = 100.0;
  spec.seed = 1;
  return spec;
}

TEST(Simulate, Validation) {
  auto s = base_spec();
  s.lambdas = {1.0, 2.0};
  EXPECT_THROW(validate(s), ParameterError);
  s = base_spec();
  s.radial_gamma = 0.0;
  EXPECT_THROW(validate(s), ParameterError);
  s = base_spec();
  s.horizon_sessions = 10;
  EXPECT_THROW(validate(s), ParameterError);
  s = base_spec();
  s.rpeak_source.clear();
  EXPECT_THROW(validate(s), ParameterError);
  s = base_spec();
  s.lambdas[1] = -1.0;
  EXPECT_THROW(validate(s), ParameterError);
  EXPECT_NO_THROW(validate(base_spec()));
}

TEST(Simulate, DeterministicAndSorted) {
  auto a = simulate_sessions(base_spec());
  auto b = simulate_sessions(base_spec());
  ASSERT_EQ(a.sessions.size(), b.sessions.size());
  for (std::size_t i = 0; i < a.sessions.size(); ++i) {
    EXPECT_EQ(a.sessions[i].gamma_start, b.sessions[i].gamma_start);
    EXPECT_EQ(a.sessions[i].size, b.sessions[i].size);
    EXPECT_EQ(a.sessions[i].duration, b.sessions[i].duration);
    EXPECT_EQ(a.sessions[i].peak_rate, b.sessions[i].peak_rate);
  }
  EXPECT_TRUE(std::is_sorted(a.sessions.begin(), a.sessions.end(),
                             [](const Session& x, const Session& y) { return x.gamma_start < y.gamma_start; }));
  auto spec = base_spec();
  spec.seed = 2;
  EXPECT_NE(simulate_sessions(spec).sessions.front().size, a.sessions.front().size);
}

TEST(Simulate, PolarInversionIdentity) {
  auto out = simulate_sessions(base_spec());
  ASSERT_FALSE(out.sessions.empty());
  for (std::size_t i = 0; i < out.sessions.size(); ++i) {
    const auto& s = out.sessions[i];
    EXPECT_EQ(s.size + s.duration, out.radius[i]);
    EXPECT_EQ(s.rate, s.size / s.duration);
    EXPECT_GE(out.radius[i], 1.0);
    EXPECT_GT(out.psi[i], 0.0);
    EXPECT_LT(out.psi[i], 0.5);
    EXPECT_GT(out.theta[i], 0.0);
    EXPECT_LT(out.theta[i], 1.0);
    EXPECT_EQ(s.key.src, "sim");
    EXPECT_EQ(s.key.dst, "g" + std::to_string(out.group[i]));
  }
}

TEST(Simulate, FullDependenceLimit) {
  auto spec = base_spec();
  spec.beta0 = -1e4;
  spec.beta1 = 0.0;
  auto out = simulate_sessions(spec);
  for (const auto& s : out.sessions) EXPECT_EQ(s.size, s.duration);
}

TEST(Simulate, RadialIndexRecovered) {
  auto spec = base_spec();
  spec.radial_gamma = 0.7;
  spec.horizon_seconds.reset();
  spec.horizon_sessions = 20000;
  auto out = simulate_sessions(spec);
  EXPECT_NEAR(hill(out.radius, out.radius.size() / 20).gamma, 0.7, 0.1);
}

TEST(Simulate, GroupCountsArePoisson) {
  auto spec = base_spec();
  std::vector<std::vector<double>> counts(spec.q);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    spec.seed = seed;
    auto out = simulate_sessions(spec);
    std::vector<double> c(spec.q, 0.0);
    for (std::size_t g : out.group) c[g - 1] += 1.0;
    for (std::size_t g = 0; g < spec.q; ++g) counts[g].push_back(c[g]);
  }
  for (std::size_t g = 0; g < spec.q; ++g) {
    // Dispersion statistic sum (N - mu)^2 / mu ~ chi^2 with 100 degrees of freedom.
    const double mu = spec.lambdas[g] * *spec.horizon_seconds;
    double stat = 0.0;
    for (double c : counts[g]) stat += (c - mu) * (c - mu) / mu;
    boost::math::chi_squared chi(100.0);
    const double p = boost::math::cdf(boost::math::complement(chi, stat));
    EXPECT_GT(p, 0.01) << "group " << g + 1;
  }
}

TEST(Simulate, ThetaMatchesLogisticInNarrowBand) {
  auto spec = base_spec();
  spec.rpeak_source.assign(100, 5000.0);
  spec.horizon_seconds.reset();
  spec.horizon_sessions = 100000;
  auto out = simulate_sessions(spec);
  const double psi = half_logit(spec.beta0 + spec.beta1 * std::log(5000.0));
  LogisticSampler sampler(psi);
  EXPECT_GT(out.theta.size(), 95000u);
  EXPECT_LT(testing::ks_distance(out.theta, [&](double t) { return sampler.cdf(t); }), 0.02);
}

TEST(Simulate, InterarrivalsPassDiagnostics) {
  auto spec = base_spec();
  spec.horizon_seconds = 3000.0;
  auto out = simulate_sessions(spec);
  auto groups = split_by_quantiles(out.sessions, spec.q);
  for (const auto& g : groups) {
    auto d = poisson_diagnostics(g.sessions);
    EXPECT_GT(d.qq_correlation, 0.99);
  }
}

TEST(Simulate, Backtransform) {
  auto spec = base_spec();
  std::vector<MarginalTable> tables(spec.q);
  for (auto& t : tables) {
    for (int i = 1; i <= 50; ++i) {
      t.size.push_back(1000.0 * i);
      t.duration.push_back(0.1 * i);
    }
  }
  spec.backtransform = tables;
  auto out = simulate_sessions(spec);
  for (const auto& s : out.sessions) {
    EXPECT_GE(s.size, 1000.0);
    EXPECT_LE(s.size, 50000.0);
    EXPECT_GE(s.duration, 0.1);
    EXPECT_LE(s.duration, 5.0);
  }
}

}  // namespace
}  // namespace peakrate
