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

#include "sftts/layers/layers.h"

#include <cmath>

#include "sftts/common/error.h"

namespace sftts::nn {

Linear::Linear(const Builder& b, const std::string& name, int64_t in, int64_t out, bool bias) {
  w_ = b.Add(name + ".w", XavierTensor({in, out}, in, out, *b.rng));
  if (bias) b_ = b.Add(name + ".b", Tensor({out}));
}

LayerNormLayer::LayerNormLayer(const Builder& b, const std::string& name, int64_t dim) {
  gamma_ = b.Add(name + ".gamma", Tensor({dim}, 1.0f));
  beta_ = b.Add(name + ".beta", Tensor({dim}));
}

Conv1dLayer::Conv1dLayer(const Builder& b, const std::string& name, int64_t in, int64_t out,
                         int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw UsageError(name + ": conv kernel must be odd");
  w_ = b.Add(name + ".w", XavierTensor({out, in, kernel}, in * kernel, out * kernel, *b.rng));
  b_ = b.Add(name + ".b", Tensor({out}));
}

MultiHeadAttention::MultiHeadAttention(const Builder& b, const std::string& name, int64_t dim,
                                       int heads)
    : heads_(heads) {
  if (heads < 1 || dim % heads != 0) {
    throw UsageError(name + ": " + std::to_string(heads) + " heads do not divide width " +
                     std::to_string(dim));
  }
  q_ = Linear(b, name + ".q", dim, dim);
  k_ = Linear(b, name + ".k", dim, dim);
  v_ = Linear(b, name + ".v", dim, dim);
  o_ = Linear(b, name + ".o", dim, dim);
}

Var MultiHeadAttention::operator()(const Var& query, const Var& memory,
                                   const AttentionMask* mask) const {
  return o_(Attention(q_(query), k_(memory), v_(memory), heads_, mask));
}

FeedForward::FeedForward(const Builder& b, const std::string& name, int64_t dim, int64_t hidden,
                         int kernel)
    : kernel_(kernel) {
  if (kernel == 1) {
    l1_ = Linear(b, name + ".l1", dim, hidden);
    l2_ = Linear(b, name + ".l2", hidden, dim);
  } else {
    c1_ = Conv1dLayer(b, name + ".c1", dim, hidden, kernel);
    c2_ = Conv1dLayer(b, name + ".c2", hidden, dim, kernel);
  }
}

Var FeedForward::operator()(const Var& x) const {
  if (kernel_ == 1) return l2_(Relu(l1_(x)));
  return c2_(Relu(c1_(x)));
}

TransformerBlock::TransformerBlock(const Builder& b, const std::string& name,
                                   const BlockShape& s)
    : attn_(b, name + ".attn", s.dim, s.heads),
      ln1_(b, name + ".ln1", s.dim),
      ln2_(b, name + ".ln2", s.dim),
      ffn_(b, name + ".ffn", s.dim, s.ff, s.kernel) {}

Var TransformerBlock::operator()(const Var& x, const AttentionMask* mask) const {
  Var h = ln1_(Add(x, attn_(x, x, mask)));
  return ln2_(Add(h, ffn_(h)));
}

Tensor SinusoidalPositions(int64_t n, int64_t dim, int64_t start) {
  Tensor t({n, dim});
  for (int64_t p = 0; p < n; ++p) {
    for (int64_t i = 0; i < dim / 2; ++i) {
      const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / dim);
      const double a = static_cast<double>(p + start) * freq;
      t.at(p, 2 * i) = static_cast<float>(std::sin(a));
      t.at(p, 2 * i + 1) = static_cast<float>(std::cos(a));
    }
  }
  return t;
}

Var AddPositions(const Var& x) {
  return Add(x, Constant(SinusoidalPositions(x.dim(0), x.dim(1))));
}

}  // namespace sftts::nn
