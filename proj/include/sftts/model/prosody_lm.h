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

// Autoregressive prosody model: a prefix-LM transformer over per-phoneme
// (duration, pitch, energy) unit triples. The prefix is the phoneme hidden
// sequence followed by the encoded prompt; step t sees the prefix and steps
// before t. Three independent heads read the same hidden state.

#ifndef SFTTS_MODEL_PROSODY_LM_H_
#define SFTTS_MODEL_PROSODY_LM_H_

#include <algorithm>
#include <string>
#include <vector>

#include "sftts/dsp/features.h"
#include "sftts/layers/layers.h"
#include "sftts/model/config.h"

namespace sftts::model {

enum class UnitStream { kDuration, kPitch, kEnergy };
UnitStream ParseStream(const std::string& s);
const char* StreamName(UnitStream s);

struct StepLogits {
  Var duration;  // (S x 32)
  Var pitch;     // (S x 64)
  Var energy;    // (S x 64)
};

struct Sampling {
  bool greedy = false;
  double temperature = 1.0;
};

class ProsodyLM {
 public:
  ProsodyLM() = default;
  ProsodyLM(const nn::Builder& b, const ModelConfig& cfg);

  // Unit embedding tables; the generators embed units through these too.
  const Var& duration_table() const { return dur_; }
  const Var& pitch_table() const { return pitch_; }
  const Var& energy_table() const { return energy_; }

  // Inputs for `count` steps: BOS, then the summed embeddings of
  // history[0 .. count-2], plus the learned step positions. (count x H).
  Var StepInputs(const dsp::UnitSequence& history, int64_t count) const;
  // Logits at every step given prefix parts and step inputs.
  StepLogits Forward(const Var& x, const Var& r, const Var& steps) const;
  // Teacher forcing over the whole target sequence.
  StepLogits TeacherForced(const Var& x, const Var& r, const dsp::UnitSequence& targets) const;
  // Logits for step history.size() (one row per stream).
  StepLogits NextStep(const Var& x, const Var& r, const dsp::UnitSequence& history) const;
  // Decodes n steps; streams are sampled independently.
  dsp::UnitSequence Decode(const Var& x, const Var& r, int64_t n, const Sampling& sampling,
                           Rng& rng) const;

 private:
  void CheckUnits(const dsp::UnitSequence& u, int64_t upto) const;

  int64_t max_steps_ = 0;
  Var dur_, pitch_, energy_;
  Var bos_, positions_, segments_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::Linear head_d_, head_p_, head_e_;
};

struct ProsodyLoss {
  Var total;  // sum of the three stream means
  Var duration, pitch, energy;
};
ProsodyLoss ProsodyCrossEntropy(const StepLogits& logits, const dsp::UnitSequence& targets);

// Sum over steps and streams of log p(target).
double SequenceLogProb(const StepLogits& logits, const dsp::UnitSequence& targets);

// Per-stream fraction of steps whose argmax equals the target.
struct UnitAccuracy {
  double duration = 0.0, pitch = 0.0, energy = 0.0;
  double min() const { return std::min(duration, std::min(pitch, energy)); }
};
UnitAccuracy CompareUnits(const dsp::UnitSequence& a, const dsp::UnitSequence& b);

// Shifts one stream by `offset` and clamps to the codebook.
dsp::UnitSequence ManipulateUnits(const dsp::UnitSequence& units, UnitStream stream, int offset);

}  // namespace sftts::model

#endif  // SFTTS_MODEL_PROSODY_LM_H_
