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

// Inference: zero-shot, cross-lingual, style transfer and unit manipulation
// all run through one routing. The speaker prompt y_s feeds the global style
// and the generators; the style prompt y_p (y_s when absent) feeds the
// prosody language model.

#ifndef SFTTS_TASKS_SYNTHESIS_H_
#define SFTTS_TASKS_SYNTHESIS_H_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sftts/model/config.h"
#include "sftts/model/model.h"

namespace sftts::tasks {

struct UnitOffsets {
  int duration = 0;
  int pitch = 0;
  int energy = 0;
  bool any() const { return duration != 0 || pitch != 0 || energy != 0; }
};

struct SynthesisRequest {
  std::string id;
  std::vector<int> phonemes;
  int text_language = -1;    // -1 when unknown
  Tensor speaker_prompt;     // y_s, (T x 80) log mel
  int prompt_language = -1;
  std::optional<Tensor> style_prompt;  // y_p
  UnitOffsets offsets;
  uint64_t seed = 0;
  model::Sampling sampling;
};

struct SynthesisResult {
  std::string id;
  Tensor mel;                     // (sum(durations) x 80)
  dsp::UnitSequence units;        // after offsets
  std::vector<int> durations;     // frames per phoneme
  std::vector<double> pitch_proxy;  // dequantised normalised pitch per frame
  Tensor noise;                   // z as drawn
  uint64_t seed = 0;
  bool cross_lingual = false;
  bool style_transfer = false;
};

SynthesisResult Synthesize(const model::Model& m, const SynthesisRequest& req,
                           model::RepresentationMode mode = model::RepresentationMode::kCoarse);

// Mean over phonemes of the dequantised (normalised) pitch units.
double MeanDequantizedPitch(const dsp::UnitSequence& units);

// Per-frame dequantised pitch, each phoneme's value held for its duration.
std::vector<double> PitchProxy(const dsp::UnitSequence& units, const std::vector<int>& durations);

struct LoadedModel {
  model::RunConfig config;
  int64_t step = 0;
  std::unique_ptr<model::Model> model;
};
// Rebuilds the model recorded in a checkpoint. Throws DataError for a
// missing or corrupt file and for a checkpoint that never trained.
LoadedModel LoadTrainedModel(const std::string& checkpoint_path);

}  // namespace sftts::tasks

#endif  // SFTTS_TASKS_SYNTHESIS_H_
