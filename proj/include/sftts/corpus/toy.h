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

// Synthetic "toy speech": two languages with disjoint phoneme alphabets,
// speakers with a spectral tilt/timbre and F0 offset, and prosody families
// of known shape. Log mel frames are synthesised directly:
//
//   mel[t, b] = envelope[phoneme][b] + speaker_colour[b]
//             + ripple(f0_t, b)      (voiced phonemes only)
//             + log_gain[phoneme]    (+ optional noise)
//
// The ripple is a harmonic comb sampled at the band centres, so F0 is
// recoverable from the mel itself (see ToyOracle).

#ifndef SFTTS_CORPUS_TOY_H_
#define SFTTS_CORPUS_TOY_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sftts/corpus/corpus.h"
#include "sftts/dsp/features.h"
#include "sftts/numerics/rng.h"

namespace sftts::corpus {

// Prosody families.
inline constexpr const char* kStyleNeutral = "neutral";
inline constexpr const char* kStyleExpressive = "expressive";
// Delta-distribution family: durations depend only on the phoneme, pitch and
// gain only on the position; no jitter.
inline constexpr const char* kStyleDeterministic = "deterministic";

struct ToySpec {
  uint64_t seed = 1234;
  int speakers_per_language = 4;
  int utterances_per_speaker_style = 200;
  std::vector<std::string> styles = {kStyleNeutral, kStyleExpressive};
  int min_phonemes = 5;
  int max_phonemes = 12;
  double ripple = 0.6;          // log-amplitude of the harmonic comb
  double mel_noise_std = 0.02;  // per-bin Gaussian noise
  double val_fraction = 0.05;
  double test_fraction = 0.05;

  // Single-line key=value form stored in the manifest.
  std::string Format() const;
  static ToySpec Parse(const std::string& line);
  void Validate() const;
};

inline constexpr int kNumLanguages = 2;

// Everything the seed fixes before any utterance is drawn.
class ToyWorld {
 public:
  explicit ToyWorld(const ToySpec& spec);

  const ToySpec& spec() const { return spec_; }
  const std::vector<PhonemeInfo>& phonemes() const { return phonemes_; }
  const std::vector<SpeakerInfo>& speakers() const { return speakers_; }
  // Phoneme ids of one language.
  std::vector<int> Alphabet(int language) const;
  const std::vector<double>& Envelope(int phoneme) const { return envelopes_[phoneme]; }
  int BaseDuration(int phoneme) const { return base_duration_[phoneme]; }
  // Additive per-band speaker colouring (tilt plus smooth timbre curve).
  const std::vector<double>& SpeakerColour(int speaker) const { return colour_[speaker]; }
  // Ripple weight per band: 1 up to 800 Hz, tapering to 0 at 1200 Hz.
  const std::vector<double>& RippleWeights() const { return ripple_weight_; }

  // One log mel frame (80 values, no noise).
  std::vector<double> Frame(int phoneme, int speaker, double f0_hz, double log_gain) const;

  int SpeakerIndex(const std::string& id) const;

 private:
  ToySpec spec_;
  std::vector<PhonemeInfo> phonemes_;
  std::vector<SpeakerInfo> speakers_;
  std::vector<std::vector<double>> envelopes_;
  std::vector<int> base_duration_;
  std::vector<std::vector<double>> colour_;
  std::vector<double> ripple_weight_;
};

// Ground-truth prosody of one generated utterance (besides the frame features).
struct ToyUtterance {
  Utterance utt;
  std::vector<double> log_gain;     // per phoneme
  std::vector<double> phoneme_f0;   // per phoneme, 0 if unvoiced
};

ToyUtterance GenerateUtterance(const ToyWorld& world, int speaker, const std::string& style,
                               int index);

// Whole corpus in memory (stats included), sorted by id.
Corpus GenerateCorpus(const ToySpec& spec);

// Oracles that read phonemes and F0 back out of a log mel.
class ToyOracle {
 public:
  explicit ToyOracle(const ToyWorld& world);

  // Nearest envelope after regressing out a per-frame offset and tilt.
  // language < 0 searches both alphabets.
  int ClassifyFrame(const float* frame, int language) const;
  // Harmonic-comb matched filter over the low bands.
  dsp::PitchTrack EstimateF0(const Tensor& mel) const;

 private:
  const ToyWorld& world_;
  std::vector<double> candidates_hz_;
  std::vector<std::vector<double>> patterns_;  // high-passed, unit norm
  std::vector<int> bands_;                     // bands carrying ripple
};

// Harmonic waveform rendering of an utterance's ground truth, used to push
// toy data through the audio front end.
std::vector<float> RenderWaveform(const ToyWorld& world, const ToyUtterance& u, uint64_t seed);

}  // namespace sftts::corpus

#endif  // SFTTS_CORPUS_TOY_H_
