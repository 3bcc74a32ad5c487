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

// Multi-window 2-D patch discriminator. Each window length has its own
// convolution stack over a (window x 80) crop treated as a one-channel image:
//
//   conv k, stride 1 -> ReLU -> conv k, stride 2 -> ReLU
//   -> conv k, stride 2 -> ReLU -> conv k to one channel, stride 1
//
// all with padding k/2, giving a patch map of about (window/4 x 20) scores.

#ifndef SFTTS_TRAINING_DISCRIMINATOR_H_
#define SFTTS_TRAINING_DISCRIMINATOR_H_

#include <utility>
#include <vector>

#include "sftts/layers/layers.h"
#include "sftts/model/config.h"

namespace sftts::training {

class Discriminator {
 public:
  Discriminator() = default;
  // Registers parameters in `store` under the discriminator group.
  Discriminator(ParamStore& store, const model::ModelConfig& cfg, uint64_t seed);

  const std::vector<int>& windows() const { return windows_; }
  // Scores the crop mel[start, start + window) for window index `w`.
  Var Score(const Var& mel, size_t w, int64_t start) const;
  // Patch-map extent (rows, cols) for a window length.
  std::pair<int64_t, int64_t> OutputExtent(int64_t window) const;

 private:
  struct Stack {
    std::vector<Var> w, b;
  };
  std::vector<int> windows_;
  int kernel_ = 3;
  std::vector<Stack> stacks_;
};

inline constexpr int kDiscriminatorStrides[4] = {1, 2, 2, 1};

// Random crop start for a window; -1 when the mel is shorter than the window.
int64_t CropStart(int64_t frames, int64_t window, Rng& rng);

// LSGAN: L_D = mean((real - 1)^2) + mean(fake^2); L_G = mean((fake - 1)^2).
Var LsganDiscriminatorLoss(const Var& real, const Var& fake);
Var LsganGeneratorLoss(const Var& fake);

}  // namespace sftts::training

#endif  // SFTTS_TRAINING_DISCRIMINATOR_H_
