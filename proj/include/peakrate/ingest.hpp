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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace peakrate {

// One packet header as read from the normalized packet CSV.
struct PacketRecord {
  double ts = 0.0;  // seconds since trace epoch
  std::string src;
  std::string dst;
  std::uint64_t bytes = 0;

  bool operator==(const PacketRecord&) const = default;
};

// Ordered (source, destination) pair; direction matters.
struct FlowKey {
  std::string src;
  std::string dst;

  auto operator<=>(const FlowKey&) const = default;
};

// An end-to-end session: a cluster of packets on one flow whose successive
// gaps are all below the gap threshold.
struct Session {
  FlowKey key;
  double gamma_start = 0.0;  // arrival time of the first packet
  double size = 0.0;         // S, total payload (bytes; real-valued for synthetic sessions)
  double duration = 0.0;     // D, seconds
  double rate = 0.0;         // R = S/D
  double peak_rate = 0.0;    // R^v, max over contiguous packet windows
  std::size_t packets = 0;   // p
  std::optional<double> max_input;   // I_delta
  std::optional<double> delta_peak;  // R_delta
};

struct IngestConfig {
  double gap_threshold = 2.0;  // t; packets split where gap >= t
  double min_duration = 0.1;   // sessions with D < min_duration are dropped
  std::optional<double> delta;  // window for I_delta / R_delta
  bool compute_legacy = false;
  std::size_t max_peak_packets = 10000;  // guard for the O(p^2) peak rate
};

struct IngestStats {
  std::size_t packets = 0;
  std::size_t sessions = 0;
  std::size_t discarded_sessions = 0;
  std::uint64_t total_bytes = 0;
  std::uint64_t discarded_bytes = 0;
};

// Parses the packet CSV (header `ts,src,dst,bytes`). Records are returned in
// file order. Throws ParseError carrying the line number on malformed input.
std::vector<PacketRecord> parse_packets(std::istream& in);

// Clusters packets into sessions per flow and computes S, D, R, R^v and,
// when configured, the legacy delta predictors. Output is sorted by
// gamma_start (ties by flow key). Sessions with zero duration are always
// dropped because their rate is undefined.
std::vector<Session> sessionize(std::span<const PacketRecord> packets, const IngestConfig& cfg,
                                IngestStats* stats = nullptr);

// Peak rate from per-packet byte counts and the p-1 interarrival times.
// Packets separated by a zero interarrival are merged before evaluation.
// Window spans are running sums of interarrivals, so with D taken as their
// left-to-right sum the full window reproduces S/D exactly.
double peak_rate(std::span<const double> bytes, std::span<const double> interarrivals,
                 std::size_t max_packets = 10000);

// Same, from absolute arrival times (one per packet, nondecreasing). Window
// spans are taken as differences of arrival times, so the full window
// reproduces S/D bit for bit.
double peak_rate_from_times(std::span<const double> bytes, std::span<const double> times,
                            std::size_t max_packets = 10000);

struct LegacyPredictors {
  double max_input = 0.0;   // I_delta
  double delta_peak = 0.0;  // R_delta
};

// Splits the session into ceil(D/delta) windows anchored at the first
// packet; the last window has length D - (l-1)*delta.
LegacyPredictors legacy_predictors(std::span<const double> bytes, std::span<const double> times,
                                   double delta);

// Session CSV: `gamma,S,D,R,R_peak,p,src,dst`, optionally followed by
// `I_delta,R_delta` when any session carries legacy predictors.
void write_sessions_csv(std::ostream& out, std::span<const Session> sessions);
std::vector<Session> read_sessions_csv(std::istream& in);

}  // namespace peakrate
