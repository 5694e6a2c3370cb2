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
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "peakrate/ingest.hpp"

namespace peakrate {

// Empirical marginal quantile tables of (S, D) for one group.
struct MarginalTable {
  std::vector<double> size;      // sorted ascending
  std::vector<double> duration;  // sorted ascending
};

struct SimulationSpec {
  std::size_t q = 10;
  std::vector<double> rpeak_source;  // empirical R^v sample
  std::vector<double> lambdas;       // per-group Poisson rate, 1/seconds
  double beta0 = 0.0;
  double beta1 = 0.0;
  double radial_gamma = 1.0;  // Pareto shape of N (tail index 1/gamma)
  double radial_scale = 1.0;  // lower end of the Pareto support
  // Exactly one of the two horizons: a time span, or a target session count
  // converted to the span count / sum(lambdas).
  std::optional<double> horizon_seconds;
  std::optional<std::size_t> horizon_sessions;
  std::uint64_t seed = 0;
  std::optional<std::vector<MarginalTable>> backtransform;  // one per group
};

struct SimulationOutput {
  std::vector<Session> sessions;  // merged, sorted by start time
  // Per session, aligned with `sessions`:
  std::vector<std::size_t> group;  // 1..q
  std::vector<double> psi;
  std::vector<double> theta;
  std::vector<double> radius;
  double horizon = 0.0;  // seconds actually simulated
};

// Throws ParameterError when the spec is inconsistent.
void validate(const SimulationSpec& spec);

// Session-level generator:
//  1. resample R^v with replacement and split the draws into q quantile groups;
//  2. per group, start times from a homogeneous Poisson process on [0, T];
//     every session takes an R^v drawn from its group's pool;
//  3. psi = g(beta0 + beta1 log R^v) and Theta from the logistic law;
//  4. N ~ Pareto(radial_gamma) on [radial_scale, inf);
//  5. (S, D) = (N Theta, N (1 - Theta)), optionally mapped per group through
//     the empirical marginals by rank.
// Group g uses RNG stream (seed, g); the result is bit-reproducible.
// Sessions carry src "sim" and dst "g<index>".
SimulationOutput simulate_sessions(const SimulationSpec& spec);

// Defaults estimated from an analyzed session collection: the R^v pool,
// per-group Poisson rate MLEs, and the Hill index of the antirank radii.
// Fields not derived from data (betas, scale, horizon, seed) stay default.
SimulationSpec spec_from_sessions(std::span<const Session> sessions, std::size_t q);

}  // namespace peakrate
