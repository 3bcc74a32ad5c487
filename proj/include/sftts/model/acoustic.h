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

// Source-filter acoustic model: text and prompt encoders, global style
// embedder, Gaussian upsampling, FiLM prompt modulation, filter and source
// generators and their fusion into the coarse mel-representation.

#ifndef SFTTS_MODEL_ACOUSTIC_H_
#define SFTTS_MODEL_ACOUSTIC_H_

#include <span>
#include <vector>

#include "sftts/layers/layers.h"
#include "sftts/model/config.h"

namespace sftts::model {

// Phoneme ids -> (N x H).
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(const nn::Builder& b, const ModelConfig& cfg);
  Var operator()(std::span<const int> phonemes) const;
  const Var& table() const { return table_; }

 private:
  Var table_;
  std::vector<nn::TransformerBlock> blocks_;
};

// Prompt mel (T x 80) -> r (T x H). Self-attention is causal so that the
// only look-ahead comes from the convolutions: truncating the prompt at T'
// leaves frames before T' - ConvReach(layers, kernel) untouched.
class PromptEncoder {
 public:
  PromptEncoder() = default;
  PromptEncoder(const nn::Builder& b, const ModelConfig& cfg);
  Var operator()(const Var& mel) const;
  int64_t reach() const { return reach_; }

 private:
  nn::Linear in_;
  std::vector<nn::TransformerBlock> blocks_;
  int64_t reach_ = 0;
};

// Prompt mel -> r_g (1 x G): two convolutions, mean over time, projection.
class GlobalStyleEmbedder {
 public:
  GlobalStyleEmbedder() = default;
  GlobalStyleEmbedder(const nn::Builder& b, const ModelConfig& cfg);
  Var operator()(const Var& mel) const;

 private:
  nn::Conv1dLayer c1_, c2_;
  nn::Linear out_;
};

// (sum(d) x N) weights; row t is softmax_i(-(t + 0.5 - c_i)^2 / (2 sigma^2))
// with c_i = sum_{j<i} d_j + d_i / 2. Throws DataError on durations < 1.
Tensor GaussianUpsampleWeights(std::span<const int> durations, double sigma);
Var GaussianUpsample(const Var& tokens, std::span<const int> durations, double sigma);

struct FilmParams {
  Var gamma;  // 1 + delta
  Var beta;
};

// Cross-attention from generator frames to the prompt hidden sequence,
// then a zero-initialised linear map to (delta, beta).
class FilmLayer {
 public:
  FilmLayer() = default;
  FilmLayer(const nn::Builder& b, const std::string& name, int64_t dim, int heads);
  FilmParams operator()(const Var& query, const Var& prompt) const;
  const nn::Linear& head() const { return head_; }

 private:
  nn::MultiHeadAttention attn_;
  nn::Linear head_;
};

// gamma * h + beta; shapes must agree exactly.
Var FilmModulate(const Var& h, const Var& gamma, const Var& beta);

// Transformer stack with FiLM after every block (unless disabled).
class Generator {
 public:
  Generator() = default;
  Generator(const nn::Builder& b, const std::string& name, const ModelConfig& cfg);
  // input: sum of upsampled embeddings (T x H); prompt: r (P x H).
  Var operator()(const Var& input, const Var& prompt) const;
  const std::vector<FilmLayer>& films() const { return films_; }

 private:
  std::vector<nn::TransformerBlock> blocks_;
  std::vector<FilmLayer> films_;
};

// Element-wise sum then a linear projection (additive in the log domain).
class Fuse {
 public:
  Fuse() = default;
  Fuse(const nn::Builder& b, int64_t dim);
  Var operator()(const Var& filter, const Var& source) const;
  // Projection alone, for the single-generator ablation.
  Var Project(const Var& x) const { return proj_(x); }

 private:
  nn::Linear proj_;
};

// Shape-checked element-wise sum of two frame sequences.
Var SumFrames(const Var& a, const Var& b, const char* what);

}  // namespace sftts::model

#endif  // SFTTS_MODEL_ACOUSTIC_H_
