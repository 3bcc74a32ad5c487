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

#include "sftts/model/acoustic.h"

#include <cmath>

#include "sftts/common/error.h"
#include "sftts/dsp/features.h"

namespace sftts::model {
namespace {

nn::BlockShape ShapeOf(const StackConfig& s) {
  return nn::BlockShape{s.hidden_dim, s.ff_dim, s.heads, s.kernel_size};
}

}  // namespace

TextEncoder::TextEncoder(const nn::Builder& b, const ModelConfig& cfg) {
  const int64_t h = cfg.hidden();
  table_ = b.Add("text.embedding", NormalTensor({cfg.num_phonemes, h}, 1.0, *b.rng));
  for (int i = 0; i < cfg.text_encoder.layers; ++i) {
    blocks_.emplace_back(b, "text.block" + std::to_string(i), ShapeOf(cfg.text_encoder));
  }
}

Var TextEncoder::operator()(std::span<const int> phonemes) const {
  if (phonemes.empty()) throw DataError("text encoder: empty phoneme sequence");
  for (int id : phonemes) {
    if (id < 0 || id >= table_.dim(0)) {
      throw DataError("text encoder: phoneme id " + std::to_string(id) + " outside the alphabet of " +
                      std::to_string(table_.dim(0)));
    }
  }
  Var h = nn::AddPositions(Embedding(table_, phonemes));
  for (const auto& blk : blocks_) h = blk(h);
  return h;
}

PromptEncoder::PromptEncoder(const nn::Builder& b, const ModelConfig& cfg) {
  in_ = nn::Linear(b, "prompt.in", dsp::kNumMels, cfg.hidden());
  for (int i = 0; i < cfg.prompt_encoder.layers; ++i) {
    blocks_.emplace_back(b, "prompt.block" + std::to_string(i), ShapeOf(cfg.prompt_encoder));
  }
  reach_ = nn::ConvReach(cfg.prompt_encoder.layers, cfg.prompt_encoder.kernel_size);
}

Var PromptEncoder::operator()(const Var& mel) const {
  if (mel.shape().size() != 2 || mel.dim(0) < 1 || mel.dim(1) != dsp::kNumMels) {
    throw DataError("prompt encoder: expected a non-empty (T x 80) mel, got " +
                    ShapeString(mel.shape()));
  }
  const AttentionMask causal = AttentionMask::Causal(mel.dim(0));
  Var h = nn::AddPositions(in_(mel));
  for (const auto& blk : blocks_) h = blk(h, &causal);
  return h;
}

GlobalStyleEmbedder::GlobalStyleEmbedder(const nn::Builder& b, const ModelConfig& cfg) {
  c1_ = nn::Conv1dLayer(b, "style.c1", dsp::kNumMels, cfg.style_channels, cfg.style_kernel);
  c2_ = nn::Conv1dLayer(b, "style.c2", cfg.style_channels, cfg.style_channels, cfg.style_kernel);
  out_ = nn::Linear(b, "style.out", cfg.style_channels, cfg.global_style_dim);
}

Var GlobalStyleEmbedder::operator()(const Var& mel) const {
  if (mel.shape().size() != 2 || mel.dim(0) < 1 || mel.dim(1) != dsp::kNumMels) {
    throw DataError("global style: expected a non-empty (T x 80) mel");
  }
  Var h = Relu(c2_(Relu(c1_(mel))));
  return out_(MeanAxis(h, 0, true));
}

Tensor GaussianUpsampleWeights(std::span<const int> durations, double sigma) {
  if (durations.empty()) throw DataError("upsample: no tokens");
  if (!(sigma > 0.0)) throw UsageError("upsample: sigma must be positive");
  int64_t total = 0;
  std::vector<double> centers;
  for (int d : durations) {
    if (d < 1) throw DataError("upsample: duration " + std::to_string(d) + " < 1");
    centers.push_back(static_cast<double>(total) + 0.5 * d);
    total += d;
  }
  const int64_t n = static_cast<int64_t>(durations.size());
  Tensor w({total, n});
  std::vector<double> logit(n);
  for (int64_t t = 0; t < total; ++t) {
    const double pos = static_cast<double>(t) + 0.5;
    double mx = -INFINITY;
    for (int64_t i = 0; i < n; ++i) {
      const double d = pos - centers[i];
      logit[i] = -d * d / (2.0 * sigma * sigma);
      mx = std::max(mx, logit[i]);
    }
    double z = 0.0;
    for (int64_t i = 0; i < n; ++i) z += (logit[i] = std::exp(logit[i] - mx));
    for (int64_t i = 0; i < n; ++i) w.at(t, i) = static_cast<float>(logit[i] / z);
  }
  return w;
}

Var GaussianUpsample(const Var& tokens, std::span<const int> durations, double sigma) {
  if (tokens.shape().size() != 2 || tokens.dim(0) != static_cast<int64_t>(durations.size())) {
    throw ShapeError("upsample: " + std::to_string(durations.size()) + " durations for tokens " +
                     ShapeString(tokens.shape()));
  }
  return MatMul(Constant(GaussianUpsampleWeights(durations, sigma)), tokens);
}

FilmLayer::FilmLayer(const nn::Builder& b, const std::string& name, int64_t dim, int heads)
    : attn_(b, name + ".attn", dim, heads) {
  head_ = nn::Linear(b, name + ".head", dim, 2 * dim);
  Var w = head_.weight();  // handles share storage
  w.mutable_value().Fill(0.0f);
}

FilmParams FilmLayer::operator()(const Var& query, const Var& prompt) const {
  if (prompt.dim(0) < 1) throw DataError("film: empty prompt");
  const int64_t h = query.dim(1);
  Var out = head_(attn_(query, prompt));
  return FilmParams{AddScalar(Slice(out, 1, 0, h), 1.0f), Slice(out, 1, h, h)};
}

Var FilmModulate(const Var& h, const Var& gamma, const Var& beta) {
  if (h.shape() != gamma.shape() || h.shape() != beta.shape()) {
    throw ShapeError("film: h " + ShapeString(h.shape()) + ", gamma " +
                     ShapeString(gamma.shape()) + ", beta " + ShapeString(beta.shape()));
  }
  return Add(Mul(gamma, h), beta);
}

Generator::Generator(const nn::Builder& b, const std::string& name, const ModelConfig& cfg) {
  // Blocks first: the FiLM ablation then leaves the block weights untouched.
  for (int i = 0; i < cfg.generator.layers; ++i) {
    blocks_.emplace_back(b, name + ".block" + std::to_string(i), ShapeOf(cfg.generator));
  }
  if (cfg.no_film) return;
  for (int i = 0; i < cfg.generator.layers; ++i) {
    films_.emplace_back(b, name + ".film" + std::to_string(i), cfg.hidden(), cfg.film_heads);
  }
}

Var Generator::operator()(const Var& input, const Var& prompt) const {
  Var h = nn::AddPositions(input);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    h = blocks_[i](h);
    if (!films_.empty()) {
      const FilmParams p = films_[i](h, prompt);
      h = FilmModulate(h, p.gamma, p.beta);
    }
  }
  return h;
}

Fuse::Fuse(const nn::Builder& b, int64_t dim) { proj_ = nn::Linear(b, "fuse", dim, dim); }

Var Fuse::operator()(const Var& filter, const Var& source) const {
  return proj_(SumFrames(filter, source, "fuse"));
}

Var SumFrames(const Var& a, const Var& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": " + ShapeString(a.shape()) + " vs " +
                     ShapeString(b.shape()));
  }
  return Add(a, b);
}

}  // namespace sftts::model
