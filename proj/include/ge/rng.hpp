/*
 * Copyright 2026 The Grounded Explainer Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ge {

// Portable gaussian source.
//
// Uniforms come from std::mt19937_64, whose output sequence is fixed by the
// C++ standard. Each normal variate consumes two consecutive 64-bit outputs
// u1, u2, mapped to (0, 1] as ((u >> 11) + 1) * 2^-53, and is the cosine
// branch of the Box-Muller transform:
//
//     z = sqrt(-2 ln u1) * cos(2 pi u2)
//
// The sine branch is discarded so that every draw is independent of call
// parity. Any implementation following these steps reproduces the stream.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double next() {
    const double u1 = to_unit(engine_());
    const double u2 = to_unit(engine_());
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static double to_unit(std::uint64_t bits) {
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
  }

  std::mt19937_64 engine_;
};

}  // namespace ge
