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

#include "sftts/tasks/synthesis.h"

#include "sftts/common/error.h"
#include "sftts/training/checkpoint.h"

namespace sftts::tasks {

SynthesisResult Synthesize(const model::Model& m, const SynthesisRequest& req,
                           model::RepresentationMode mode) {
  if (req.phonemes.empty()) throw DataError("synthesize " + req.id + ": no phonemes");
  if (req.speaker_prompt.rank() != 2 || req.speaker_prompt.dim(1) != dsp::kNumMels) {
    throw DataError("synthesize " + req.id + ": speaker prompt must be (T x 80), got " +
                    ShapeString(req.speaker_prompt.shape()));
  }
  NoGradGuard guard;
  Rng rng(req.seed);
  SynthesisResult out;
  out.id = req.id;
  out.seed = req.seed;
  out.cross_lingual = req.text_language >= 0 && req.prompt_language >= 0 &&
                      req.text_language != req.prompt_language;
  // A style prompt identical to the speaker prompt is plain zero-shot, and
  // routes identically below.
  out.style_transfer = req.style_prompt.has_value() && !(*req.style_prompt == req.speaker_prompt);
  // Noise first, so it does not depend on how many draws decoding takes.
  out.noise = m.SampleNoise(rng);

  const Var y_s = Constant(req.speaker_prompt);
  const Var y_p = req.style_prompt ? Constant(*req.style_prompt) : y_s;
  const Var x = m.EncodeText(req.phonemes);
  const Var r_g = m.GlobalStyle(y_s);
  const Var r_s = m.EncodePrompt(y_s);
  const Var r_p = m.EncodePrompt(y_p);

  dsp::UnitSequence units =
      m.lm().Decode(x, r_p, static_cast<int64_t>(req.phonemes.size()), req.sampling, rng);
  if (req.offsets.duration != 0) {
    units = model::ManipulateUnits(units, model::UnitStream::kDuration, req.offsets.duration);
  }
  if (req.offsets.pitch != 0) {
    units = model::ManipulateUnits(units, model::UnitStream::kPitch, req.offsets.pitch);
  }
  if (req.offsets.energy != 0) {
    units = model::ManipulateUnits(units, model::UnitStream::kEnergy, req.offsets.energy);
  }
  for (int d : units.duration) out.durations.push_back(dsp::DequantizeDuration(d));

  const model::Representations reps = m.Generate(x, units, out.durations, r_s, mode);
  out.mel = m.Decode(reps.coarse, r_g, Constant(out.noise)).value();
  out.pitch_proxy = PitchProxy(units, out.durations);
  out.units = std::move(units);
  return out;
}

double MeanDequantizedPitch(const dsp::UnitSequence& units) {
  if (units.pitch.empty()) throw DataError("mean pitch of an empty unit sequence");
  double s = 0.0;
  for (int p : units.pitch) s += dsp::DequantizeUnit(p, dsp::kPitchCodebook);
  return s / static_cast<double>(units.pitch.size());
}

std::vector<double> PitchProxy(const dsp::UnitSequence& units, const std::vector<int>& durations) {
  if (durations.size() != units.pitch.size()) {
    throw ShapeError("pitch proxy: " + std::to_string(durations.size()) + " durations for " +
                     std::to_string(units.pitch.size()) + " units");
  }
  std::vector<double> out;
  for (size_t i = 0; i < durations.size(); ++i) {
    out.insert(out.end(), durations[i], dsp::DequantizeUnit(units.pitch[i], dsp::kPitchCodebook));
  }
  return out;
}

LoadedModel LoadTrainedModel(const std::string& path) {
  const training::Checkpoint ckpt = training::LoadCheckpoint(path);
  if (ckpt.step <= 0) throw DataError("checkpoint " + path + " has not been trained");
  LoadedModel out;
  out.config = model::RunConfig::Parse(ckpt.config_text);
  out.step = ckpt.step;
  out.model = std::make_unique<model::Model>(out.config.model, out.config.seed);
  training::ImportParams(ckpt, out.model->params());
  return out;
}

}  // namespace sftts::tasks
