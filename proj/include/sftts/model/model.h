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

// The generator side of the system in one object: encoders, prosody model,
// filter/source generators, fusion and style decoder over one ParamStore.

#ifndef SFTTS_MODEL_MODEL_H_
#define SFTTS_MODEL_MODEL_H_

#include <span>

#include "sftts/dsp/features.h"
#include "sftts/model/acoustic.h"
#include "sftts/model/config.h"
#include "sftts/model/prosody_lm.h"
#include "sftts/model/style_decoder.h"

namespace sftts::model {

struct Representations {
  Var filter;  // undefined under the single-generator ablation
  Var source;
  Var coarse;
};

enum class RepresentationMode { kCoarse, kFilterOnly, kSourceOnly };
RepresentationMode ParseRepresentationMode(const std::string& s);

class Model {
 public:
  // Parameters are created in a fixed order from `seed`.
  Model(const ModelConfig& cfg, uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  Var EncodeText(std::span<const int> phonemes) const { return text_(phonemes); }
  Var EncodePrompt(const Var& mel) const { return prompt_(mel); }
  Var GlobalStyle(const Var& mel) const { return style_(mel); }

  // Frame-level representations from phoneme hiddens x, units (pitch and
  // energy are embedded; durations come from `frames`) and prompt r_s.
  Representations Generate(const Var& x, const dsp::UnitSequence& units,
                           std::span<const int> frames, const Var& r_s,
                           RepresentationMode mode = RepresentationMode::kCoarse) const;
  Var Decode(const Var& coarse, const Var& r_g, const Var& z) const { return decoder_(coarse, r_g, z); }
  // z ~ N(0, I), (1 x noise_dim).
  Tensor SampleNoise(Rng& rng) const;

  const TextEncoder& text_encoder() const { return text_; }
  const PromptEncoder& prompt_encoder() const { return prompt_; }
  const ProsodyLM& lm() const { return lm_; }
  const Generator& filter_generator() const { return filter_; }
  const Generator& source_generator() const { return source_; }
  const StyleDecoder& decoder() const { return decoder_; }

 private:
  ModelConfig cfg_;
  ParamStore store_;
  TextEncoder text_;
  PromptEncoder prompt_;
  GlobalStyleEmbedder style_;
  ProsodyLM lm_;
  Generator filter_, source_;
  Fuse fuse_;
  StyleDecoder decoder_;
};

}  // namespace sftts::model

#endif  // SFTTS_MODEL_MODEL_H_
