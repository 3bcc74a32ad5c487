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

#include "sftts/training/discriminator.h"

#include "sftts/common/error.h"
#include "sftts/dsp/features.h"

namespace sftts::training {

Discriminator::Discriminator(ParamStore& store, const model::ModelConfig& cfg, uint64_t seed)
    : windows_(cfg.discriminator_windows), kernel_(cfg.discriminator_kernel) {
  Rng rng(Rng::Derive(seed, 9));
  const int64_t c = cfg.discriminator_hidden, k = kernel_;
  const int64_t chans[5] = {1, c, c, c, 1};
  for (size_t i = 0; i < windows_.size(); ++i) {
    Stack s;
    for (int l = 0; l < 4; ++l) {
      const std::string n = "disc.w" + std::to_string(windows_[i]) + ".conv" + std::to_string(l);
      const int64_t cin = chans[l], cout = chans[l + 1];
      s.w.push_back(store.Add(n + ".w",
                              XavierTensor({cout, cin, k, k}, cin * k * k, cout * k * k, rng),
                              kGroupDiscriminator));
      s.b.push_back(store.Add(n + ".b", Tensor({cout}), kGroupDiscriminator));
    }
    stacks_.push_back(std::move(s));
  }
}

Var Discriminator::Score(const Var& mel, size_t w, int64_t start) const {
  const int64_t win = windows_.at(w);
  if (start < 0 || start + win > mel.dim(0)) {
    throw ShapeError("discriminator: crop [" + std::to_string(start) + ", +" +
                     std::to_string(win) + ") outside " + std::to_string(mel.dim(0)) + " frames");
  }
  Var h = Reshape(Slice(mel, 0, start, win), {1, win, mel.dim(1)});
  const Stack& s = stacks_[w];
  for (int l = 0; l < 4; ++l) {
    h = Conv2d(h, s.w[l], s.b[l], kDiscriminatorStrides[l], kernel_ / 2);
    if (l < 3) h = Relu(h);
  }
  return h;
}

std::pair<int64_t, int64_t> Discriminator::OutputExtent(int64_t window) const {
  int64_t r = window, c = dsp::kNumMels;
  for (int l = 0; l < 4; ++l) {
    r = Conv2dOutExtent(r, kernel_, kDiscriminatorStrides[l], kernel_ / 2);
    c = Conv2dOutExtent(c, kernel_, kDiscriminatorStrides[l], kernel_ / 2);
  }
  return {r, c};
}

int64_t CropStart(int64_t frames, int64_t window, Rng& rng) {
  if (frames < window) return -1;
  return rng.UniformInt(0, frames - window);
}

Var LsganDiscriminatorLoss(const Var& real, const Var& fake) {
  return Add(Mean(Square(AddScalar(real, -1.0f))), Mean(Square(fake)));
}

Var LsganGeneratorLoss(const Var& fake) { return Mean(Square(AddScalar(fake, -1.0f))); }

}  // namespace sftts::training
