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

#include <cmath>
#include <cstdint>
#include <random>

namespace peakrate {

using Rng = std::mt19937_64;

// Deterministic engine for replication `stream` of a run seeded with `seed`.
// Streams are decorrelated through a SplitMix64 finalizer so that results
// never depend on the order in which replications are scheduled.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t a = mix(seed);
  std::uint64_t b = mix(a ^ mix(stream + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

// Uniform on the open interval (0, 1).
inline double open_uniform(Rng& rng) {
  for (;;) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

// Pareto with tail index 1/gamma on [scale, inf): P(X > x) = (x/scale)^(-1/gamma).
inline double pareto(Rng& rng, double gamma, double scale = 1.0) {
  return scale * std::pow(open_uniform(rng), -gamma);
}

inline double exponential(Rng& rng, double rate = 1.0) {
  return -std::log(open_uniform(rng)) / rate;
}

}  // namespace peakrate
