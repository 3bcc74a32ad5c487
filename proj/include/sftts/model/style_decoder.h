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

// Acoustic decoder with sample-adaptive kernel selection: a mapping network
// turns (r_g, z) into a style vector w; every decoder convolution mixes a
// bank of kernels with softmax weights predicted from w, scales the input
// channels by an affine of w and demodulates each output channel.

#ifndef SFTTS_MODEL_STYLE_DECODER_H_
#define SFTTS_MODEL_STYLE_DECODER_H_

#include <vector>

#include "sftts/layers/layers.h"
#include "sftts/model/config.h"

namespace sftts::model {

inline constexpr float kDemodEps = 1e-8f;

// concat(r_g, z) -> w through `depth` linear layers with ReLU in between.
class MappingNetwork {
 public:
  MappingNetwork() = default;
  MappingNetwork(const nn::Builder& b, const ModelConfig& cfg);
  // r_g (1 x G), z (1 x Z) -> (1 x W).
  Var operator()(const Var& r_g, const Var& z) const;

 private:
  std::vector<nn::Linear> layers_;
};

// sum_k alpha_k bank_k. bank (K x Cout x Cin x k), alpha (1 x K).
Var AggregateKernels(const Var& bank, const Var& alpha);
// W' = s (per input channel) * filter; W'' = W' / sqrt(sum_o W'^2 + eps).
// filter (Cout x Cin x k), s (1 x Cin).
Var ModulateDemodulate(const Var& filter, const Var& s);

class AdaptiveConv1d {
 public:
  AdaptiveConv1d() = default;
  AdaptiveConv1d(const nn::Builder& b, const std::string& name, int64_t in, int64_t out, int kernel,
                 int bank_size, int64_t style_dim);

  // Kernel for style w (1 x W): (Cout x Cin x k).
  Var Kernel(const Var& w) const;
  // Bank mixing weights alpha (1 x K).
  Var Select(const Var& w) const { return Softmax(select_(w), 1); }
  Var Scale(const Var& w) const { return scale_(w); }
  Var operator()(const Var& x, const Var& w) const;

  const Var& bank() const { return bank_; }
  const Var& bias() const { return bias_; }

 private:
  Var bank_, bias_;
  nn::Linear select_, scale_;
};

// Parameters that the adaptive decoder adds over the plain-convolution
// ablation: bank entries beyond the first, the selection and scale affines of
// every adaptive layer, and the mapping network.
int64_t AdaptiveParameterDelta(const ModelConfig& cfg);

// Decoder block: LN(h + SelfAttn(h)); LN(h + conv2(ReLU(conv1(h)))).
class StyleDecoder {
 public:
  StyleDecoder() = default;
  StyleDecoder(const nn::Builder& b, const ModelConfig& cfg);

  // Style vector for (r_g, z); undefined under the plain ablation.
  Var Style(const Var& r_g, const Var& z) const;
  // coarse (T x H) -> mel (T x 80).
  Var operator()(const Var& coarse, const Var& r_g, const Var& z) const;
  bool adaptive() const { return adaptive_; }

 private:
  struct Block {
    nn::MultiHeadAttention attn;
    nn::LayerNormLayer ln1, ln2;
    AdaptiveConv1d a1, a2;
    nn::Conv1dLayer p1, p2;
  };
  bool adaptive_ = true;
  MappingNetwork mapping_;
  std::vector<Block> blocks_;
  nn::Linear out_;
};

}  // namespace sftts::model

#endif  // SFTTS_MODEL_STYLE_DECODER_H_
