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

// Parameterised building blocks shared by the acoustic model, the prosody
// language model and the decoder. Each layer registers its leaves in a
// ParamStore under "<prefix>.<leaf>" and keeps handles to them.

#ifndef SFTTS_LAYERS_LAYERS_H_
#define SFTTS_LAYERS_LAYERS_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sftts/numerics/autograd.h"
#include "sftts/numerics/params.h"
#include "sftts/numerics/rng.h"

namespace sftts::nn {

// Where new parameters go.
struct Builder {
  ParamStore* store;
  Rng* rng;
  std::string group;

  Var Add(const std::string& name, Tensor init) const { return store->Add(name, std::move(init), group); }
};

class Linear {
 public:
  Linear() = default;
  Linear(const Builder& b, const std::string& name, int64_t in, int64_t out, bool bias = true);
  Var operator()(const Var& x) const { return sftts::Linear(x, w_, b_); }

  const Var& weight() const { return w_; }
  const Var& bias() const { return b_; }
  int64_t in() const { return w_.dim(0); }
  int64_t out() const { return w_.dim(1); }

 private:
  Var w_, b_;
};

class LayerNormLayer {
 public:
  LayerNormLayer() = default;
  LayerNormLayer(const Builder& b, const std::string& name, int64_t dim);
  Var operator()(const Var& x) const { return LayerNorm(x, gamma_, beta_); }

 private:
  Var gamma_, beta_;
};

// Time-major same-padded convolution.
class Conv1dLayer {
 public:
  Conv1dLayer() = default;
  Conv1dLayer(const Builder& b, const std::string& name, int64_t in, int64_t out, int kernel);
  Var operator()(const Var& x) const { return Conv1d(x, w_, b_); }

 private:
  Var w_, b_;
};

// Projections around fused multi-head attention.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(const Builder& b, const std::string& name, int64_t dim, int heads);
  Var operator()(const Var& query, const Var& memory, const AttentionMask* mask = nullptr) const;

 private:
  Linear q_, k_, v_, o_;
  int heads_ = 1;
};

// Two-layer feed-forward with ReLU. kernel 1 is position-wise (plain linear
// layers); larger kernels are same-padded convolutions.
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(const Builder& b, const std::string& name, int64_t dim, int64_t hidden, int kernel);
  Var operator()(const Var& x) const;

 private:
  int kernel_ = 1;
  Linear l1_, l2_;
  Conv1dLayer c1_, c2_;
};

struct BlockShape {
  int64_t dim = 128;
  int64_t ff = 512;
  int heads = 4;
  int kernel = 3;
};

// Post-norm transformer block: x = LN(x + SelfAttn(x)); x = LN(x + FFN(x)).
// An optional hook runs on the block output (used for FiLM).
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(const Builder& b, const std::string& name, const BlockShape& shape);
  Var operator()(const Var& x, const AttentionMask* mask = nullptr) const;

 private:
  MultiHeadAttention attn_;
  LayerNormLayer ln1_, ln2_;
  FeedForward ffn_;
};

// Standard sin/cos table (n x dim), rows offset by `start`.
Tensor SinusoidalPositions(int64_t n, int64_t dim, int64_t start = 0);

// Adds the sinusoidal table to a (T x D) sequence.
Var AddPositions(const Var& x);

// Receptive reach (frames to one side) of `layers` blocks with two same-padded
// convolutions of width `kernel` each.
inline int64_t ConvReach(int layers, int kernel) { return static_cast<int64_t>(layers) * 2 * ((kernel - 1) / 2); }

}  // namespace sftts::nn

#endif  // SFTTS_LAYERS_LAYERS_H_
