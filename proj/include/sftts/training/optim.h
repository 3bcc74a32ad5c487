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

// AdamW with decoupled weight decay and global gradient-norm clipping.

#ifndef SFTTS_TRAINING_OPTIM_H_
#define SFTTS_TRAINING_OPTIM_H_

#include <map>
#include <string>
#include <vector>

#include "sftts/numerics/params.h"

namespace sftts::training {

struct AdamWOptions {
  double beta1 = 0.8;
  double beta2 = 0.99;
  double eps = 1e-9;
  double weight_decay = 0.01;
};

class AdamW {
 public:
  explicit AdamW(const AdamWOptions& opts = {}) : opts_(opts) {}

  // Updates every parameter of `group` that holds a gradient. Decay applies
  // to matrices and higher-rank tensors only (not biases or norm gains).
  void Step(ParamStore& store, const std::string& group, double lr);

  // Moments and per-group step counts, for checkpoints.
  struct Moments {
    Tensor m, v;
  };
  std::map<std::string, Moments>& moments() { return moments_; }
  const std::map<std::string, Moments>& moments() const { return moments_; }
  std::map<std::string, int64_t>& steps() { return steps_; }
  const std::map<std::string, int64_t>& steps() const { return steps_; }

 private:
  AdamWOptions opts_;
  std::map<std::string, Moments> moments_;
  std::map<std::string, int64_t> steps_;
};

// L2 norm over the gradients of `groups`; rescales them to `max_norm` when
// larger (max_norm <= 0 disables). Returns the pre-clip norm.
double ClipGradNorm(ParamStore& store, const std::vector<std::string>& groups, double max_norm);

}  // namespace sftts::training

#endif  // SFTTS_TRAINING_OPTIM_H_
