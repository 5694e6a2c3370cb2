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
#include <span>
#include <string_view>
#include <vector>

#include "peakrate/ingest.hpp"

namespace peakrate {

enum class Predictor { PeakRate, MaxInput, DeltaPeak };

Predictor parse_predictor(std::string_view name);  // peak | maxinput | deltapeak
std::string_view predictor_name(Predictor p);

// Value of the segmentation predictor for one session. Throws DataError when
// a legacy predictor was not computed for the session.
double predictor_value(const Session& s, Predictor p);

struct SessionGroup {
  std::size_t index = 0;   // 1..q
  double lo_percent = 0;   // quantile range (lo, hi]
  double hi_percent = 0;
  Predictor predictor = Predictor::PeakRate;
  std::vector<Session> sessions;  // ascending predictor value
};

// Rank-based split into q groups of near-equal size: after sorting by the
// predictor (ties by gamma_start, then input order), group g receives ranks
// (floor((g-1)n/q), floor(g n/q)].
std::vector<SessionGroup> split_by_quantiles(std::span<const Session> sessions, std::size_t q,
                                             Predictor predictor = Predictor::PeakRate);

}  // namespace peakrate
