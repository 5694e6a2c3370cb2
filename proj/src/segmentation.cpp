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

#include "peakrate/segmentation.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "peakrate/error.hpp"

namespace peakrate {

Predictor parse_predictor(std::string_view name) {
  if (name == "peak") return Predictor::PeakRate;
  if (name == "maxinput") return Predictor::MaxInput;
  if (name == "deltapeak") return Predictor::DeltaPeak;
  throw ParameterError("unknown predictor '" + std::string(name) + "'");
}

std::string_view predictor_name(Predictor p) {
  switch (p) {
    case Predictor::PeakRate:
      return "peak";
    case Predictor::MaxInput:
      return "maxinput";
    case Predictor::DeltaPeak:
      return "deltapeak";
  }
  return "peak";
}

double predictor_value(const Session& s, Predictor p) {
  switch (p) {
    case Predictor::PeakRate:
      return s.peak_rate;
    case Predictor::MaxInput:
      if (!s.max_input) throw DataError("session lacks I_delta; ingest with --delta");
      return *s.max_input;
    case Predictor::DeltaPeak:
      if (!s.delta_peak) throw DataError("session lacks R_delta; ingest with --delta");
      return *s.delta_peak;
  }
  return s.peak_rate;
}

std::vector<SessionGroup> split_by_quantiles(std::span<const Session> sessions, std::size_t q,
                                             Predictor predictor) {
  const std::size_t n = sessions.size();
  if (q < 2) throw ParameterError("need at least 2 groups");
  if (n == 0) throw DataError("no sessions to segment");
  if (q > n) throw DataError("more groups (" + std::to_string(q) + ") than sessions (" +
                             std::to_string(n) + ")");

  std::vector<double> key(n);
  for (std::size_t i = 0; i < n; ++i) key[i] = predictor_value(sessions[i], predictor);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return key[a] < key[b];
    return sessions[a].gamma_start < sessions[b].gamma_start;
  });

  std::vector<SessionGroup> groups(q);
  for (std::size_t g = 0; g < q; ++g) {
    auto& grp = groups[g];
    grp.index = g + 1;
    grp.predictor = predictor;
    grp.lo_percent = 100.0 * static_cast<double>(g) / static_cast<double>(q);
    grp.hi_percent = 100.0 * static_cast<double>(g + 1) / static_cast<double>(q);
    const std::size_t lo = g * n / q;
    const std::size_t hi = (g + 1) * n / q;
    grp.sessions.reserve(hi - lo);
    for (std::size_t r = lo; r < hi; ++r) grp.sessions.push_back(sessions[order[r]]);
  }
  return groups;
}

}  // namespace peakrate
