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

#include "sftts/model/model.h"

#include "sftts/common/error.h"

namespace sftts::model {

RepresentationMode ParseRepresentationMode(const std::string& s) {
  if (s == "coarse") return RepresentationMode::kCoarse;
  if (s == "filter-only") return RepresentationMode::kFilterOnly;
  if (s == "source-only") return RepresentationMode::kSourceOnly;
  throw UsageError("unknown representation mode '" + s + "' (coarse|filter-only|source-only)");
}

namespace {

// Every component draws from its own stream so that toggling one ablation
// does not reshuffle the initialisation of the others.
nn::Builder Part(ParamStore& store, Rng& rng, const char* group) {
  return nn::Builder{&store, &rng, group};
}

}  // namespace

Model::Model(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.Validate();
  Rng r_text(Rng::Derive(seed, 1)), r_prompt(Rng::Derive(seed, 2)), r_style(Rng::Derive(seed, 3)),
      r_lm(Rng::Derive(seed, 4)), r_filter(Rng::Derive(seed, 5)), r_source(Rng::Derive(seed, 6)),
      r_fuse(Rng::Derive(seed, 7)), r_dec(Rng::Derive(seed, 8));
  text_ = TextEncoder(Part(store_, r_text, kGroupAcoustic), cfg_);
  prompt_ = PromptEncoder(Part(store_, r_prompt, kGroupAcoustic), cfg_);
  style_ = GlobalStyleEmbedder(Part(store_, r_style, kGroupAcoustic), cfg_);
  lm_ = ProsodyLM(Part(store_, r_lm, kGroupProsody), cfg_);
  filter_ = Generator(Part(store_, r_filter, kGroupAcoustic), "filter", cfg_);
  if (!cfg_.no_source_filter) {
    source_ = Generator(Part(store_, r_source, kGroupAcoustic), "source", cfg_);
  }
  fuse_ = Fuse(Part(store_, r_fuse, kGroupAcoustic), cfg_.hidden());
  decoder_ = StyleDecoder(Part(store_, r_dec, kGroupAcoustic), cfg_);
}

Representations Model::Generate(const Var& x, const dsp::UnitSequence& units,
                                std::span<const int> frames, const Var& r_s,
                                RepresentationMode mode) const {
  const int64_t n = x.dim(0);
  if (units.size() != n || static_cast<int64_t>(frames.size()) != n) {
    throw DataError("generate: " + std::to_string(n) + " phonemes but " +
                    std::to_string(units.size()) + " unit steps and " +
                    std::to_string(frames.size()) + " durations");
  }
  const Var up = Constant(GaussianUpsampleWeights(frames, cfg_.upsample_sigma));
  const Var p = Embedding(lm_.pitch_table(), std::span<const int>(units.pitch));
  const Var e = Embedding(lm_.energy_table(), std::span<const int>(units.energy));
  Representations out;
  if (cfg_.no_source_filter) {
    if (mode != RepresentationMode::kCoarse) {
      throw UsageError("representation analysis needs the source-filter split");
    }
    out.coarse = fuse_.Project(filter_(MatMul(up, Add(Add(x, p), e)), r_s));
    return out;
  }
  out.filter = filter_(MatMul(up, Add(x, e)), r_s);
  out.source = source_(MatMul(up, Add(p, e)), r_s);
  switch (mode) {
    case RepresentationMode::kCoarse:
      out.coarse = fuse_(out.filter, out.source);
      break;
    case RepresentationMode::kFilterOnly:
      out.coarse = fuse_(out.filter, Constant(Tensor(out.source.shape())));
      break;
    case RepresentationMode::kSourceOnly:
      out.coarse = fuse_(Constant(Tensor(out.filter.shape())), out.source);
      break;
  }
  return out;
}

Tensor Model::SampleNoise(Rng& rng) const {
  return NormalTensor({1, cfg_.noise_dim}, 1.0, rng);
}

}  // namespace sftts::model
