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
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace peakrate {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto exit codes (parameter -> 1, parse/data -> 2,
// convergence -> 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied an argument outside the operation's domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Input data violates a precondition (too few points, nonpositive values...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed text input; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A numerical optimizer failed. The trace holds (argument, objective) pairs
// visited by the optimizer, for diagnostics.
class ConvergenceError : public Error {
 public:
  using Trace = std::vector<std::pair<double, double>>;
  ConvergenceError(const std::string& what, Trace trace = {})
      : Error(what), trace_(std::move(trace)) {}
  const Trace& trace() const { return trace_; }

 private:
  Trace trace_;
};

}  // namespace peakrate
