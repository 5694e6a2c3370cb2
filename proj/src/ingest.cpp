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

#include "peakrate/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "peakrate/csv.hpp"
#include "peakrate/error.hpp"

namespace peakrate {

std::vector<PacketRecord> parse_packets(std::istream& in) {
  std::vector<PacketRecord> out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view row = csv::chomp(line);
    if (!header_seen) {
      if (row != "ts,src,dst,bytes") throw ParseError(lineno, "expected header 'ts,src,dst,bytes'");
      header_seen = true;
      continue;
    }
    if (row.empty()) continue;
    auto fields = csv::split(row);
    if (fields.size() != 4) throw ParseError(lineno, "expected 4 fields");
    auto ts = csv::parse_double(fields[0]);
    if (!ts || !std::isfinite(*ts) || *ts < 0.0) throw ParseError(lineno, "bad timestamp");
    if (fields[1].empty() || fields[2].empty()) throw ParseError(lineno, "empty endpoint");
    auto bytes = csv::parse_uint(fields[3]);
    if (!bytes || *bytes < 1) throw ParseError(lineno, "bytes must be a positive integer");
    out.push_back({*ts, std::string(fields[1]), std::string(fields[2]), *bytes});
  }
  if (!header_seen) throw ParseError(1, "missing header");
  return out;
}

namespace {

// Collapses packets that share an arrival time into one logical packet.
void merge_simultaneous(std::span<const double> bytes, std::span<const double> times,
                        std::vector<double>& mb, std::vector<double>& mt) {
  mb.clear();
  mt.clear();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && times[i] < times[i - 1]) throw ParameterError("arrival times must be nondecreasing");
    if (!mt.empty() && times[i] == mt.back()) {
      mb.back() += bytes[i];
    } else {
      mb.push_back(bytes[i]);
      mt.push_back(times[i]);
    }
  }
}

}  // namespace

double peak_rate_from_times(std::span<const double> bytes, std::span<const double> times,
                            std::size_t max_packets) {
  if (bytes.size() != times.size()) throw ParameterError("bytes and times differ in length");
  std::vector<double> b, t;
  merge_simultaneous(bytes, times, b, t);
  const std::size_t p = b.size();
  if (p < 2) throw DataError("peak rate undefined: session has fewer than two distinct arrival times");
  if (p > max_packets) {
    throw DataError("session has " + std::to_string(p) + " packets, above the peak-rate cap of " +
                    std::to_string(max_packets));
  }
  double best = 0.0;
  for (std::size_t j = 0; j + 1 < p; ++j) {
    double window = b[j];
    for (std::size_t e = j + 1; e < p; ++e) {
      window += b[e];
      best = std::max(best, window / (t[e] - t[j]));
    }
  }
  return best;
}

double peak_rate(std::span<const double> bytes, std::span<const double> interarrivals,
                 std::size_t max_packets) {
  if (bytes.size() < 2) throw DataError("peak rate undefined: session has fewer than two packets");
  if (interarrivals.size() + 1 != bytes.size()) {
    throw ParameterError("expected one interarrival per consecutive packet pair");
  }
  // Merge packets behind a zero interarrival; gap[i] separates b[i] and b[i+1].
  std::vector<double> b{bytes[0]}, gap;
  for (std::size_t i = 0; i < interarrivals.size(); ++i) {
    if (!(interarrivals[i] >= 0.0)) throw ParameterError("interarrival times must be nonnegative");
    if (interarrivals[i] == 0.0) {
      b.back() += bytes[i + 1];
    } else {
      b.push_back(bytes[i + 1]);
      gap.push_back(interarrivals[i]);
    }
  }
  const std::size_t p = b.size();
  if (p < 2) throw DataError("peak rate undefined: session has fewer than two distinct arrival times");
  if (p > max_packets) {
    throw DataError("session has " + std::to_string(p) + " packets, above the peak-rate cap of " +
                    std::to_string(max_packets));
  }
  double best = 0.0;
  for (std::size_t j = 0; j + 1 < p; ++j) {
    double window = b[j];
    double span = 0.0;
    for (std::size_t e = j + 1; e < p; ++e) {
      window += b[e];
      span += gap[e - 1];
      best = std::max(best, window / span);
    }
  }
  return best;
}

LegacyPredictors legacy_predictors(std::span<const double> bytes, std::span<const double> times,
                                   double delta) {
  if (!(delta > 0.0)) throw ParameterError("delta must be positive");
  if (bytes.size() != times.size() || times.empty()) throw ParameterError("bytes/times mismatch");
  const double t0 = times.front();
  const double duration = times.back() - t0;
  if (!(duration > 0.0)) throw DataError("legacy predictors need a session with D > 0");

  auto windows = static_cast<std::size_t>(std::ceil(duration / delta));
  windows = std::max<std::size_t>(windows, 1);
  while (windows > 1 && duration - static_cast<double>(windows - 1) * delta <= 0.0) --windows;
  const double last_len = duration - static_cast<double>(windows - 1) * delta;

  std::vector<double> load(windows, 0.0);
  for (std::size_t i = 0; i < times.size(); ++i) {
    auto w = static_cast<std::size_t>(std::floor((times[i] - t0) / delta));
    load[std::min(w, windows - 1)] += bytes[i];
  }
  LegacyPredictors out;
  for (std::size_t w = 0; w < windows; ++w) {
    const double len = (w + 1 == windows) ? last_len : delta;
    out.max_input = std::max(out.max_input, load[w]);
    out.delta_peak = std::max(out.delta_peak, load[w] / len);
  }
  return out;
}

std::vector<Session> sessionize(std::span<const PacketRecord> packets, const IngestConfig& cfg,
                                IngestStats* stats) {
  if (!(cfg.gap_threshold > 0.0)) throw ParameterError("gap threshold must be positive");
  if (!(cfg.min_duration >= 0.0)) throw ParameterError("min duration must be nonnegative");
  if (cfg.compute_legacy && !cfg.delta) throw ParameterError("legacy predictors need delta");

  IngestStats local;
  local.packets = packets.size();

  std::vector<std::size_t> order(packets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (const auto& pk : packets) {
    if (!std::isfinite(pk.ts) || pk.ts < 0.0 || pk.bytes < 1) throw DataError("invalid packet record");
    local.total_bytes += pk.bytes;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = packets[a];
    const auto& pb = packets[b];
    if (int c = pa.src.compare(pb.src); c != 0) return c < 0;
    if (int c = pa.dst.compare(pb.dst); c != 0) return c < 0;
    return pa.ts < pb.ts;
  });

  std::vector<Session> out;
  std::vector<double> bytes, times;
  auto flush = [&](const PacketRecord* flow) {
    if (times.empty()) return;
    const double duration = times.back() - times.front();
    const double size = std::accumulate(bytes.begin(), bytes.end(), 0.0);
    if (!(duration > 0.0) || duration < cfg.min_duration) {
      ++local.discarded_sessions;
      local.discarded_bytes += static_cast<std::uint64_t>(size);
      return;
    }
    Session s;
    s.key = {flow->src, flow->dst};
    s.gamma_start = times.front();
    s.size = size;
    s.duration = duration;
    s.rate = size / duration;
    s.packets = times.size();
    s.peak_rate = peak_rate_from_times(bytes, times, cfg.max_peak_packets);
    if (cfg.compute_legacy) {
      auto legacy = legacy_predictors(bytes, times, *cfg.delta);
      s.max_input = legacy.max_input;
      s.delta_peak = legacy.delta_peak;
    }
    out.push_back(std::move(s));
  };

  const PacketRecord* current = nullptr;
  for (std::size_t idx : order) {
    const auto& pk = packets[idx];
    bool same_flow = current && current->src == pk.src && current->dst == pk.dst;
    if (!same_flow || pk.ts - times.back() >= cfg.gap_threshold) {
      flush(current);
      bytes.clear();
      times.clear();
    }
    current = &pk;
    bytes.push_back(static_cast<double>(pk.bytes));
    times.push_back(pk.ts);
  }
  flush(current);

  std::stable_sort(out.begin(), out.end(), [](const Session& a, const Session& b) {
    if (a.gamma_start != b.gamma_start) return a.gamma_start < b.gamma_start;
    return a.key < b.key;
  });
  local.sessions = out.size();
  if (stats) *stats = local;
  return out;
}

void write_sessions_csv(std::ostream& out, std::span<const Session> sessions) {
  const bool legacy = std::any_of(sessions.begin(), sessions.end(),
                                  [](const Session& s) { return s.max_input.has_value(); });
  out << "gamma,S,D,R,R_peak,p,src,dst";
  if (legacy) out << ",I_delta,R_delta";
  out << '\n';
  for (const auto& s : sessions) {
    out << csv::format_double(s.gamma_start) << ',' << csv::format_double(s.size) << ','
        << csv::format_double(s.duration) << ',' << csv::format_double(s.rate) << ','
        << csv::format_double(s.peak_rate) << ',' << s.packets << ',' << s.key.src << ','
        << s.key.dst;
    if (legacy) {
      out << ',' << (s.max_input ? csv::format_double(*s.max_input) : "") << ','
          << (s.delta_peak ? csv::format_double(*s.delta_peak) : "");
    }
    out << '\n';
  }
}

std::vector<Session> read_sessions_csv(std::istream& in) {
  std::vector<Session> out;
  std::string line;
  std::size_t lineno = 0;
  bool legacy = false;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view row = csv::chomp(line);
    if (!header_seen) {
      if (row == "gamma,S,D,R,R_peak,p,src,dst") {
        legacy = false;
      } else if (row == "gamma,S,D,R,R_peak,p,src,dst,I_delta,R_delta") {
        legacy = true;
      } else {
        throw ParseError(lineno, "expected session CSV header");
      }
      header_seen = true;
      continue;
    }
    if (row.empty()) continue;
    auto f = csv::split(row);
    if (f.size() != (legacy ? 10u : 8u)) throw ParseError(lineno, "wrong field count");
    Session s;
    auto need = [&](std::string_view v, const char* name) {
      auto d = csv::parse_double(v);
      if (!d) throw ParseError(lineno, std::string("bad ") + name);
      return *d;
    };
    s.gamma_start = need(f[0], "gamma");
    s.size = need(f[1], "S");
    s.duration = need(f[2], "D");
    s.rate = need(f[3], "R");
    s.peak_rate = need(f[4], "R_peak");
    auto p = csv::parse_uint(f[5]);
    if (!p) throw ParseError(lineno, "bad p");
    s.packets = static_cast<std::size_t>(*p);
    s.key = {std::string(f[6]), std::string(f[7])};
    if (legacy) {
      if (!f[8].empty()) s.max_input = need(f[8], "I_delta");
      if (!f[9].empty()) s.delta_peak = need(f[9], "R_delta");
    }
    out.push_back(std::move(s));
  }
  if (!header_seen) throw ParseError(1, "missing header");
  return out;
}

}  // namespace peakrate
