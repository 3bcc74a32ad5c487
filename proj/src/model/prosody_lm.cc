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

#include "sftts/model/prosody_lm.h"

#include <algorithm>
#include <cmath>

#include "sftts/common/error.h"

namespace sftts::model {

UnitStream ParseStream(const std::string& s) {
  if (s == "duration") return UnitStream::kDuration;
  if (s == "pitch") return UnitStream::kPitch;
  if (s == "energy") return UnitStream::kEnergy;
  throw UsageError("unknown unit stream '" + s + "' (duration|pitch|energy)");
}

const char* StreamName(UnitStream s) {
  switch (s) {
    case UnitStream::kDuration: return "duration";
    case UnitStream::kPitch: return "pitch";
    case UnitStream::kEnergy: return "energy";
  }
  return "?";
}

ProsodyLM::ProsodyLM(const nn::Builder& b, const ModelConfig& cfg) : max_steps_(cfg.max_steps) {
  const int64_t h = cfg.hidden();
  Rng& rng = *b.rng;
  dur_ = b.Add("units.duration", NormalTensor({cfg.duration_codebook, h}, 1.0, rng));
  pitch_ = b.Add("units.pitch", NormalTensor({cfg.pitch_codebook, h}, 1.0, rng));
  energy_ = b.Add("units.energy", NormalTensor({cfg.energy_codebook, h}, 1.0, rng));
  bos_ = b.Add("lm.bos", NormalTensor({1, h}, 1.0, rng));
  positions_ = b.Add("lm.positions", NormalTensor({cfg.max_steps, h}, 1.0, rng));
  segments_ = b.Add("lm.segments", NormalTensor({2, h}, 1.0, rng));
  const StackConfig& s = cfg.prosody;
  for (int i = 0; i < s.layers; ++i) {
    blocks_.emplace_back(b, "lm.block" + std::to_string(i),
                         nn::BlockShape{h, s.ff_dim, s.heads, 1});
  }
  head_d_ = nn::Linear(b, "lm.head_duration", h, cfg.duration_codebook);
  head_p_ = nn::Linear(b, "lm.head_pitch", h, cfg.pitch_codebook);
  head_e_ = nn::Linear(b, "lm.head_energy", h, cfg.energy_codebook);
}

void ProsodyLM::CheckUnits(const dsp::UnitSequence& u, int64_t upto) const {
  if (u.duration.size() != u.pitch.size() || u.duration.size() != u.energy.size()) {
    throw DataError("prosody: unit streams have different lengths");
  }
  auto check = [](int v, int64_t k, const char* name) {
    if (v < 0 || v >= k) {
      throw DataError(std::string("prosody: ") + name + " unit " + std::to_string(v) +
                      " outside codebook of " + std::to_string(k));
    }
  };
  for (int64_t i = 0; i < upto; ++i) {
    check(u.duration[i], dur_.dim(0), "duration");
    check(u.pitch[i], pitch_.dim(0), "pitch");
    check(u.energy[i], energy_.dim(0), "energy");
  }
}

Var ProsodyLM::StepInputs(const dsp::UnitSequence& history, int64_t count) const {
  if (count < 1) throw DataError("prosody: at least one step is required");
  if (count > max_steps_) {
    throw DataError("prosody: " + std::to_string(count) + " steps exceed max_steps " +
                    std::to_string(max_steps_));
  }
  if (history.size() < count - 1) throw DataError("prosody: history shorter than requested steps");
  CheckUnits(history, count - 1);
  Var in = bos_;
  if (count > 1) {
    const std::span<const int> d(history.duration.data(), count - 1);
    const std::span<const int> p(history.pitch.data(), count - 1);
    const std::span<const int> e(history.energy.data(), count - 1);
    Var units = Add(Add(Embedding(dur_, d), Embedding(pitch_, p)), Embedding(energy_, e));
    in = Concat(std::vector<Var>{bos_, units}, 0);
  }
  return Add(in, Slice(positions_, 0, 0, count));
}

StepLogits ProsodyLM::Forward(const Var& x, const Var& r, const Var& steps) const {
  Var px = Add(x, Slice(segments_, 0, 0, 1));
  Var pr = Add(r, Slice(segments_, 0, 1, 1));
  const int64_t prefix = x.dim(0) + r.dim(0);
  const int64_t total = prefix + steps.dim(0);
  const AttentionMask mask = AttentionMask::PrefixCausal(prefix, total);
  Var seq = Concat(std::vector<Var>{px, pr, steps}, 0);
  for (const auto& blk : blocks_) seq = blk(seq, &mask);
  Var out = Slice(seq, 0, prefix, steps.dim(0));
  return StepLogits{head_d_(out), head_p_(out), head_e_(out)};
}

StepLogits ProsodyLM::TeacherForced(const Var& x, const Var& r,
                                    const dsp::UnitSequence& targets) const {
  CheckUnits(targets, targets.size());
  return Forward(x, r, StepInputs(targets, targets.size()));
}

StepLogits ProsodyLM::NextStep(const Var& x, const Var& r, const dsp::UnitSequence& history) const {
  const int64_t t = history.size();
  StepLogits all = Forward(x, r, StepInputs(history, t + 1));
  return StepLogits{Slice(all.duration, 0, t, 1), Slice(all.pitch, 0, t, 1),
                    Slice(all.energy, 0, t, 1)};
}

namespace {

int Pick(const Tensor& logits, const Sampling& s, Rng& rng) {
  const int64_t k = logits.size();
  const float* l = logits.data();
  int best = 0;
  for (int64_t i = 1; i < k; ++i) {
    if (l[i] > l[best]) best = static_cast<int>(i);
  }
  if (s.greedy) return best;
  if (!(s.temperature > 0.0)) throw UsageError("sampling: temperature must be positive");
  std::vector<double> w(k);
  for (int64_t i = 0; i < k; ++i) w[i] = std::exp((l[i] - l[best]) / s.temperature);
  return rng.Categorical(std::span<const double>(w));
}

}  // namespace

dsp::UnitSequence ProsodyLM::Decode(const Var& x, const Var& r, int64_t n, const Sampling& s,
                                    Rng& rng) const {
  if (n < 1) throw DataError("prosody: decode needs at least one phoneme");
  NoGradGuard no_grad;
  dsp::UnitSequence out;
  for (int64_t t = 0; t < n; ++t) {
    const StepLogits l = NextStep(x, r, out);
    out.duration.push_back(Pick(l.duration.value(), s, rng));
    out.pitch.push_back(Pick(l.pitch.value(), s, rng));
    out.energy.push_back(Pick(l.energy.value(), s, rng));
  }
  return out;
}

ProsodyLoss ProsodyCrossEntropy(const StepLogits& l, const dsp::UnitSequence& t) {
  const int64_t n = t.size();
  if (l.duration.dim(0) != n || l.pitch.dim(0) != n || l.energy.dim(0) != n ||
      static_cast<int64_t>(t.pitch.size()) != n || static_cast<int64_t>(t.energy.size()) != n) {
    throw ShapeError("prosody loss: " + std::to_string(l.duration.dim(0)) + " steps of logits for " +
                     std::to_string(n) + " targets");
  }
  ProsodyLoss out;
  out.duration = CrossEntropy(l.duration, std::span<const int>(t.duration));
  out.pitch = CrossEntropy(l.pitch, std::span<const int>(t.pitch));
  out.energy = CrossEntropy(l.energy, std::span<const int>(t.energy));
  out.total = Add(Add(out.duration, out.pitch), out.energy);
  return out;
}

double SequenceLogProb(const StepLogits& l, const dsp::UnitSequence& t) {
  auto stream = [](const Var& logits, const std::vector<int>& ids) {
    NoGradGuard g;
    const Tensor lp = LogSoftmax(logits, 1).value();
    double acc = 0.0;
    for (int64_t i = 0; i < lp.dim(0); ++i) acc += lp.at(i, ids[i]);
    return acc;
  };
  return stream(l.duration, t.duration) + stream(l.pitch, t.pitch) + stream(l.energy, t.energy);
}

UnitAccuracy CompareUnits(const dsp::UnitSequence& a, const dsp::UnitSequence& b) {
  if (a.size() != b.size() || a.size() == 0) throw DataError("unit accuracy: length mismatch");
  auto frac = [](const std::vector<int>& x, const std::vector<int>& y) {
    int64_t hit = 0;
    for (size_t i = 0; i < x.size(); ++i) hit += x[i] == y[i];
    return static_cast<double>(hit) / static_cast<double>(x.size());
  };
  return UnitAccuracy{frac(a.duration, b.duration), frac(a.pitch, b.pitch),
                      frac(a.energy, b.energy)};
}

dsp::UnitSequence ManipulateUnits(const dsp::UnitSequence& units, UnitStream stream, int offset) {
  dsp::UnitSequence out = units;
  std::vector<int>* v = nullptr;
  int k = 0;
  switch (stream) {
    case UnitStream::kDuration: v = &out.duration; k = dsp::kDurationCodebook; break;
    case UnitStream::kPitch: v = &out.pitch; k = dsp::kPitchCodebook.size; break;
    case UnitStream::kEnergy: v = &out.energy; k = dsp::kEnergyCodebook.size; break;
  }
  for (int& x : *v) x = std::clamp(x + offset, 0, k - 1);
  return out;
}

}  // namespace sftts::model
