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

#include "sftts/training/objectives.h"

#include <algorithm>
#include <cmath>

#include "sftts/common/error.h"

namespace sftts::training {

std::pair<int64_t, int64_t> PromptLengthRange(int64_t frames, const model::TrainConfig& cfg) {
  auto clamp = [&](int64_t v) {
    return std::clamp<int64_t>(v, cfg.prompt_min_frames, cfg.prompt_max_frames);
  };
  const int64_t lo = clamp(static_cast<int64_t>(std::ceil(cfg.prompt_min_fraction * frames)));
  const int64_t hi = clamp(static_cast<int64_t>(std::ceil(cfg.prompt_max_fraction * frames)));
  return {std::min(lo, frames - 1), std::min(hi, frames - 1)};
}

std::optional<PromptPlan> SamplePromptPlan(int64_t frames, const model::TrainConfig& cfg,
                                           Rng& rng) {
  if (frames < cfg.min_frames) return std::nullopt;
  const auto [lo, hi] = PromptLengthRange(frames, cfg);
  PromptPlan p;
  p.length = rng.UniformInt(lo, hi);
  p.start = rng.UniformInt(0, frames - p.length);
  p.prosody_length = (p.length + 1) / 2;
  p.mask.assign(frames, 1);
  std::fill(p.mask.begin() + p.start, p.mask.begin() + p.start + p.length, 0);
  return p;
}

Var MaskedL1(const Var& pred, const Tensor& target, const std::vector<char>& mask) {
  if (pred.shape() != target.shape() || pred.shape().size() != 2 ||
      static_cast<int64_t>(mask.size()) != pred.dim(0)) {
    throw ShapeError("masked L1: prediction " + ShapeString(pred.shape()) + ", target " +
                     ShapeString(target.shape()) + ", mask " + std::to_string(mask.size()));
  }
  int64_t kept = 0;
  Tensor m({pred.dim(0), 1});
  for (size_t t = 0; t < mask.size(); ++t) {
    m[t] = mask[t] ? 1.0f : 0.0f;
    kept += mask[t] ? 1 : 0;
  }
  if (kept == 0) throw DataError("masked L1: every frame is masked");
  Var err = Mul(Abs(Sub(pred, Constant(target))), Constant(std::move(m)));
  return MulScalar(Sum(err), 1.0f / static_cast<float>(kept * pred.dim(1)));
}

double NoamLr(int64_t step, int64_t warmup, double scale) {
  if (step < 1 || warmup < 1) throw UsageError("noam: step and warmup must be >= 1");
  const double s = static_cast<double>(step), w = static_cast<double>(warmup);
  return scale * std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5));
}

double ProsodyLr(int64_t step, int64_t warmup, double scale) {
  if (step < warmup) return NoamLr(warmup, warmup, scale);
  return NoamLr(step, warmup, scale);
}

}  // namespace sftts::training
