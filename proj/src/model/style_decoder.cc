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

#include "sftts/model/style_decoder.h"

#include "sftts/common/error.h"
#include "sftts/dsp/features.h"

namespace sftts::model {

MappingNetwork::MappingNetwork(const nn::Builder& b, const ModelConfig& cfg) {
  int64_t in = cfg.global_style_dim + cfg.noise_dim;
  for (int i = 0; i < cfg.mapping_depth; ++i) {
    layers_.emplace_back(b, "mapping.l" + std::to_string(i), in, cfg.mapped_style_dim);
    in = cfg.mapped_style_dim;
  }
}

Var MappingNetwork::operator()(const Var& r_g, const Var& z) const {
  Var h = z.defined() && z.dim(1) > 0 ? Concat(std::vector<Var>{r_g, z}, 1) : r_g;
  for (size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](h);
    if (i + 1 < layers_.size()) h = Relu(h);
  }
  return h;
}

Var AggregateKernels(const Var& bank, const Var& alpha) {
  if (bank.shape().size() != 4 || alpha.shape() != Shape{1, bank.dim(0)}) {
    throw ShapeError("aggregate: bank " + ShapeString(bank.shape()) + " with weights " +
                     ShapeString(alpha.shape()));
  }
  const Shape one{bank.dim(1), bank.dim(2), bank.dim(3)};
  Var flat = Reshape(bank, {bank.dim(0), NumElements(one)});
  return Reshape(MatMul(alpha, flat), one);
}

Var ModulateDemodulate(const Var& filter, const Var& s) {
  const int64_t cout = filter.dim(0), cin = filter.dim(1), k = filter.dim(2);
  if (s.shape() != Shape{1, cin}) {
    throw ShapeError("modulate: scale " + ShapeString(s.shape()) + " for filter " +
                     ShapeString(filter.shape()));
  }
  Var mod = Reshape(Mul(filter, Reshape(s, {1, cin, 1})), {cout, cin * k});
  Var inv = Rsqrt(AddScalar(SumAxis(Square(mod), 1, true), kDemodEps));
  return Reshape(Mul(mod, inv), {cout, cin, k});
}

AdaptiveConv1d::AdaptiveConv1d(const nn::Builder& b, const std::string& name, int64_t in,
                               int64_t out, int kernel, int bank_size, int64_t style_dim) {
  bank_ = b.Add(name + ".bank", XavierTensor({bank_size, out, in, kernel}, in * kernel,
                                              out * kernel, *b.rng));
  bias_ = b.Add(name + ".b", Tensor({out}));
  select_ = nn::Linear(b, name + ".select", style_dim, bank_size);
  scale_ = nn::Linear(b, name + ".scale", style_dim, in);
  // Identity modulation at start: zero weights, unit bias.
  Var sw = scale_.weight(), sb = scale_.bias();
  sw.mutable_value().Fill(0.0f);
  sb.mutable_value().Fill(1.0f);
}

Var AdaptiveConv1d::Kernel(const Var& w) const {
  return ModulateDemodulate(AggregateKernels(bank_, Select(w)), Scale(w));
}

Var AdaptiveConv1d::operator()(const Var& x, const Var& w) const {
  return Conv1d(x, Kernel(w), bias_);
}

int64_t AdaptiveParameterDelta(const ModelConfig& cfg) {
  const int64_t h = cfg.hidden(), ff = cfg.decoder.ff_dim, k = cfg.decoder.kernel_size;
  const int64_t bank = cfg.kernel_bank, w = cfg.mapped_style_dim;
  auto layer = [&](int64_t in, int64_t out) {
    return (bank - 1) * out * in * k + (w * bank + bank) + (w * in + in);
  };
  int64_t delta = static_cast<int64_t>(cfg.decoder.layers) * (layer(h, ff) + layer(ff, h));
  int64_t in = cfg.global_style_dim + cfg.noise_dim;
  for (int i = 0; i < cfg.mapping_depth; ++i) {
    delta += in * w + w;
    in = w;
  }
  return delta;
}

StyleDecoder::StyleDecoder(const nn::Builder& b, const ModelConfig& cfg)
    : adaptive_(!cfg.no_adaptive_kernels) {
  const int64_t h = cfg.hidden();
  const StackConfig& s = cfg.decoder;
  if (adaptive_) mapping_ = MappingNetwork(b, cfg);
  for (int i = 0; i < s.layers; ++i) {
    const std::string n = "decoder.block" + std::to_string(i);
    Block blk;
    blk.attn = nn::MultiHeadAttention(b, n + ".attn", h, s.heads);
    blk.ln1 = nn::LayerNormLayer(b, n + ".ln1", h);
    blk.ln2 = nn::LayerNormLayer(b, n + ".ln2", h);
    if (adaptive_) {
      blk.a1 = AdaptiveConv1d(b, n + ".conv1", h, s.ff_dim, s.kernel_size, cfg.kernel_bank,
                              cfg.mapped_style_dim);
      blk.a2 = AdaptiveConv1d(b, n + ".conv2", s.ff_dim, h, s.kernel_size, cfg.kernel_bank,
                              cfg.mapped_style_dim);
    } else {
      blk.p1 = nn::Conv1dLayer(b, n + ".conv1", h, s.ff_dim, s.kernel_size);
      blk.p2 = nn::Conv1dLayer(b, n + ".conv2", s.ff_dim, h, s.kernel_size);
    }
    blocks_.push_back(std::move(blk));
  }
  out_ = nn::Linear(b, "decoder.out", h, dsp::kNumMels);
}

Var StyleDecoder::Style(const Var& r_g, const Var& z) const {
  if (!adaptive_) return Var();
  return mapping_(r_g, z);
}

Var StyleDecoder::operator()(const Var& coarse, const Var& r_g, const Var& z) const {
  if (coarse.shape().size() != 2 || coarse.dim(0) < 1) {
    throw DataError("decoder: empty coarse representation");
  }
  const Var w = Style(r_g, z);
  Var h = coarse;
  for (const Block& blk : blocks_) {
    h = blk.ln1(Add(h, blk.attn(h, h)));
    Var f = adaptive_ ? blk.a2(Relu(blk.a1(h, w)), w) : blk.p2(Relu(blk.p1(h)));
    h = blk.ln2(Add(h, f));
  }
  return out_(h);
}

}  // namespace sftts::model
