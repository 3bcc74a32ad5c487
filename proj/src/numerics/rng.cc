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

#include "sftts/numerics/rng.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sftts/common/error.h"

namespace sftts {

double Rng::Uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int64_t Rng::UniformInt(int64_t lo, int64_t hi) {
  if (hi < lo) throw UsageError("rng: empty integer range");
  const auto span = static_cast<double>(hi - lo + 1);
  const auto k = static_cast<int64_t>(std::floor(Uniform() * span));
  return lo + std::min<int64_t>(k, hi - lo);
}

double Rng::Normal() {
  // 1 - U keeps the log argument in (0, 1].
  const double u1 = 1.0 - Uniform();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

template <typename W>
int CategoricalImpl(Rng& rng, std::span<const W> weights) {
  if (weights.empty()) throw UsageError("rng: categorical over no outcomes");
  double total = 0.0;
  for (W w : weights) {
    if (!(w >= W(0)) || !std::isfinite(static_cast<double>(w))) {
      throw NumericError("rng: categorical weight must be finite and nonnegative");
    }
    total += static_cast<double>(w);
  }
  if (!(total > 0.0)) throw NumericError("rng: categorical weights sum to zero");
  const double target = rng.Uniform() * total;
  double acc = 0.0;
  int last_positive = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > W(0)) last_positive = static_cast<int>(i);
    acc += static_cast<double>(weights[i]);
    if (target < acc && weights[i] > W(0)) return static_cast<int>(i);
  }
  return last_positive;
}

}  // namespace

int Rng::Categorical(std::span<const double> weights) { return CategoricalImpl(*this, weights); }
int Rng::Categorical(std::span<const float> weights) { return CategoricalImpl(*this, weights); }

std::string Rng::SaveState() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::LoadState(const std::string& state) {
  std::istringstream is(state);
  is >> engine_;
  if (is.fail()) throw DataError("rng: malformed engine state");
}

uint64_t Rng::Derive(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace sftts
