// Copyright 2026 The pedwatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

namespace pedwatch {

/// mt19937_64 with hand-written draws. The engine's output sequence is fixed
/// by the C++ standard; the std distributions are not, so every draw here is
/// spelled out to keep seeded outputs identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  double exponential(double rate);

  /// Arrivals of a unit-interval Poisson process with the given mean.
  std::int64_t poisson(double mean);

  /// Geometric run length >= 1 with the given mean (>= 1).
  std::int64_t geometric_length(double mean);

 private:
  std::mt19937_64 engine_;
};

}  // namespace pedwatch
