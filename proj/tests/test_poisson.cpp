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

#include "peakrate/error.hpp"
#include "peakrate/poisson.hpp"
#include "peakrate/random.hpp"
#include "support.hpp"

namespace peakrate {
namespace {

std::vector<double> exp_sample(std::size_t n, double rate, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  std::vector<double> d(n);
  for (auto& v : d) v = exponential(rng, rate);
  return d;
}

TEST(Interarrivals, FirstDifferences) {
  EXPECT_EQ(interarrivals(std::vector<double>{0, 1, 3}), (std::vector<double>{1, 2}));
  EXPECT_EQ(interarrivals(std::vector<double>{3, 0, 1}), (std::vector<double>{1, 2}));
  EXPECT_EQ(interarrivals(std::vector<double>{0, 0, 1}), (std::vector<double>{0, 1}));
  EXPECT_THROW(interarrivals(std::vector<double>{1}), DataError);
}

TEST(Interarrivals, FromSessions) {
  std::vector<Session> s(3);
  s[0].gamma_start = 5;
  s[1].gamma_start = 1;
  s[2].gamma_start = 2;
  EXPECT_EQ(interarrivals(s), (std::vector<double>{1, 3}));
}

TEST(ExpQq, ConstantInterarrivals) {
  std::vector<double> d(30, 0.25);
  auto q = exp_qq(d);
  EXPECT_DOUBLE_EQ(q.lambda_hat, 4.0);
  EXPECT_EQ(q.qq_points.size(), 30u);
  EXPECT_NEAR(q.qq_points[0].second, -std::log(1.0 - 1.0 / 31.0) / 4.0, 1e-15);
}

TEST(ExpQq, ExponentialAndParetoFixtures) {
  auto e = exp_qq(exp_sample(4414, 2.0, 1));
  EXPECT_GT(e.qq_correlation, 0.99);
  EXPECT_NEAR(e.lambda_hat, 2.0, 0.15);
  auto p = testing::pareto_sample(4414, 1.0, 2);
  auto h = exp_qq(p);
  EXPECT_LT(h.qq_correlation, 0.9);
  // Upper tail above the line.
  EXPECT_GT(h.qq_points.back().first, h.qq_points.back().second);
}

TEST(ExpQq, Errors) {
  EXPECT_THROW(exp_qq(std::vector<double>(10, 1.0)), DataError);
  EXPECT_THROW(exp_qq(std::vector<double>(25, 0.0)), DataError);
}

TEST(Acf, LagZeroAndBounds) {
  auto d = exp_sample(500, 1.0, 3);
  auto a = acf_test(d);
  EXPECT_EQ(a.acf.front().second, 1.0);
  EXPECT_EQ(a.max_lag, 499u);
  EXPECT_EQ(a.acf.size(), 500u);
  EXPECT_NEAR(a.bound, 1.959963984540054 / std::sqrt(500.0), 1e-12);
  for (const auto& [h, r] : a.acf) EXPECT_LE(std::fabs(r), 1.0);
}

TEST(Acf, AffineInvariance) {
  auto d = exp_sample(300, 1.0, 4);
  auto t = d;
  for (auto& v : t) v = 3.0 * v + 7.0;
  auto a = acf_test(d, 50);
  auto b = acf_test(t, 50);
  for (std::size_t h = 0; h <= 50; ++h) EXPECT_NEAR(a.acf[h].second, b.acf[h].second, 1e-12);
}

TEST(Acf, IndependentAndDependentFixtures) {
  auto iid = acf_test(exp_sample(4414, 1.0, 5));
  EXPECT_LE(iid.spike_fraction, 0.06);
  Rng rng = make_stream(6, 0);
  std::vector<double> ar(4414);
  double prev = 0.0;
  for (auto& v : ar) {
    prev = 0.3 * prev + exponential(rng);
    v = prev;
  }
  EXPECT_GT(acf_test(ar, 10).spike_fraction, 0.2);
}

TEST(Acf, Errors) {
  EXPECT_THROW(acf_test(std::vector<double>(10, 2.0)), DataError);
  auto d = exp_sample(10, 1.0, 7);
  EXPECT_THROW(acf_test(d, 10), ParameterError);
  EXPECT_THROW(acf_test(d, 0), ParameterError);
  EXPECT_THROW(acf_test(d, 3, 1.5), ParameterError);
}

}  // namespace
}  // namespace peakrate
