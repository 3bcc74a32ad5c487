// Copyright 2026 The sftts Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SFTTS_NUMERICS_RNG_H_
#define SFTTS_NUMERICS_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace sftts {

// Seeded random stream. The engine is std::mt19937_64 (fully specified by
// the standard); the uniform/normal/categorical transforms are implemented
// here so draws are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [lo, hi] (inclusive).
  int64_t UniformInt(int64_t lo, int64_t hi);
  // Standard normal via Box-Muller (no cached pair, so state is just the engine).
  double Normal();
  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }
  // Index drawn proportionally to nonnegative `weights` (need not sum to 1).
  int Categorical(std::span<const double> weights);
  int Categorical(std::span<const float> weights);

  // Engine state round trip (text form of the standard engine).
  std::string SaveState() const;
  void LoadState(const std::string& state);

  // Derives an independent seed from (seed, stream) via splitmix64.
  static uint64_t Derive(uint64_t seed, uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

}  // namespace sftts

#endif  // SFTTS_NUMERICS_RNG_H_
