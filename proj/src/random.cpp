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

#include "pedwatch/random.hpp"

#include <cmath>

namespace pedwatch {

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

std::int64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  std::int64_t n = 0;
  double t = exponential(mean);
  while (t < 1.0) {
    ++n;
    t += exponential(mean);
  }
  return n;
}

std::int64_t Rng::geometric_length(double mean) {
  if (mean <= 1.0) return 1;
  const double p = 1.0 / mean;
  const double u = uniform();
  return 1 + static_cast<std::int64_t>(std::floor(std::log1p(-u) / std::log1p(-p)));
}

}  // namespace pedwatch
