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

#include "peakrate/error.hpp"
#include "peakrate/segmentation.hpp"

namespace peakrate {
namespace {

std::vector<Session> with_peaks(const std::vector<double>& peaks) {
  std::vector<Session> out;
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    Session s;
    s.gamma_start = static_cast<double>(i);
    s.peak_rate = peaks[i];
    out.push_back(s);
  }
  return out;
}

TEST(Segmentation, OnePerGroupWhenNEqualsQ) {
  auto s = with_peaks({5, 3, 9, 1, 7, 2, 8, 4, 10, 6});
  auto g = split_by_quantiles(s, 10);
  ASSERT_EQ(g.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    ASSERT_EQ(g[i].sessions.size(), 1u);
    EXPECT_EQ(g[i].index, i + 1);
    EXPECT_EQ(g[i].sessions[0].peak_rate, static_cast<double>(i + 1));
  }
  EXPECT_DOUBLE_EQ(g[0].lo_percent, 0.0);
  EXPECT_DOUBLE_EQ(g[9].hi_percent, 100.0);
}

TEST(Segmentation, RankRuleWithTies) {
  auto g = split_by_quantiles(with_peaks({2, 1, 3, 1}), 2);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].sessions[0].peak_rate, 1.0);
  EXPECT_EQ(g[0].sessions[1].peak_rate, 1.0);
  EXPECT_EQ(g[1].sessions[0].peak_rate, 2.0);
  EXPECT_EQ(g[1].sessions[1].peak_rate, 3.0);
  // Ties ordered by start time.
  EXPECT_LT(g[0].sessions[0].gamma_start, g[0].sessions[1].gamma_start);
}

TEST(Segmentation, PartitionAndMonotonicity) {
  std::vector<double> peaks;
  for (int i = 0; i < 44136; ++i) peaks.push_back(static_cast<double>((i * 7919) % 1000));
  auto g = split_by_quantiles(with_peaks(peaks), 10);
  std::size_t total = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    total += g[i].sessions.size();
    EXPECT_GE(g[i].sessions.size(), 4413u);
    EXPECT_LE(g[i].sessions.size(), 4414u);
    if (i + 1 < g.size()) EXPECT_LE(g[i].sessions.back().peak_rate, g[i + 1].sessions.front().peak_rate);
  }
  EXPECT_EQ(total, peaks.size());
}

TEST(Segmentation, Errors) {
  auto s = with_peaks({1, 2, 3});
  EXPECT_THROW(split_by_quantiles(s, 1), ParameterError);
  EXPECT_THROW(split_by_quantiles(s, 4), DataError);
  EXPECT_THROW(split_by_quantiles({}, 2), DataError);
  EXPECT_THROW(split_by_quantiles(s, 2, Predictor::MaxInput), DataError);
  EXPECT_THROW(parse_predictor("median"), ParameterError);
}

TEST(Segmentation, LegacyPredictors) {
  auto s = with_peaks({1, 2, 3, 4});
  for (std::size_t i = 0; i < s.size(); ++i) s[i].delta_peak = 10.0 - static_cast<double>(i);
  auto g = split_by_quantiles(s, 2, parse_predictor("deltapeak"));
  EXPECT_EQ(g[0].sessions[0].peak_rate, 4.0);
  EXPECT_EQ(predictor_name(g[0].predictor), "deltapeak");
}

}  // namespace
}  // namespace peakrate
