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

// Reconstruction loss with prompt masking, prompt-segment sampling and the
// learning-rate schedule.

#ifndef SFTTS_TRAINING_OBJECTIVES_H_
#define SFTTS_TRAINING_OBJECTIVES_H_

#include <optional>
#include <vector>

#include "sftts/model/config.h"
#include "sftts/numerics/autograd.h"
#include "sftts/numerics/rng.h"

namespace sftts::training {

// A random segment of the utterance serves as the acoustic prompt and is
// excluded from the reconstruction loss; the prosody prompt is the first
// half of that segment.
struct PromptPlan {
  int64_t start = 0;
  int64_t length = 0;
  int64_t prosody_length = 0;
  std::vector<char> mask;  // false exactly on [start, start + length)
};

// Length uniform in [ceil(lo_frac T), ceil(hi_frac T)] clamped to the frame
// limits, start uniform. nullopt when T is below train.min_frames.
std::optional<PromptPlan> SamplePromptPlan(int64_t frames, const model::TrainConfig& cfg, Rng& rng);
// The inclusive range SamplePromptPlan draws lengths from.
std::pair<int64_t, int64_t> PromptLengthRange(int64_t frames, const model::TrainConfig& cfg);

// Mean |pred - target| over unmasked frames and all bands. Throws DataError
// when nothing is unmasked and ShapeError on mismatched shapes.
Var MaskedL1(const Var& pred, const Tensor& target, const std::vector<char>& mask);

// scale * min(step^-1/2, step * warmup^-3/2); step >= 1.
double NoamLr(int64_t step, int64_t warmup, double scale);
// Prosody group: held at the peak until warmup, then the shared schedule.
double ProsodyLr(int64_t step, int64_t warmup, double scale);

}  // namespace sftts::training

#endif  // SFTTS_TRAINING_OBJECTIVES_H_
