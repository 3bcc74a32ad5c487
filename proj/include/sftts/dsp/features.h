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

// Acoustic features: log-mel spectrogram, pitch, energy, per-phoneme
// averaging, speaker normalisation and unit quantisation.

#ifndef SFTTS_DSP_FEATURES_H_
#define SFTTS_DSP_FEATURES_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sftts/numerics/tensor.h"

namespace sftts::dsp {

inline constexpr int kSampleRate = 22050;
inline constexpr int kFftSize = 1024;
inline constexpr int kHop = 256;
inline constexpr int kNumMels = 80;
inline constexpr double kMelFmax = 8000.0;
inline constexpr double kLogFloor = 1e-5;

// Frames under centre padding: frame t is centred on sample t * hop.
inline int64_t NumFrames(int64_t num_samples) { return (num_samples + kHop - 1) / kHop; }

// (kNumMels x kFftSize/2+1) Slaney-style filterbank over [0, kMelFmax].
const std::vector<double>& MelFilterbank();
// Centre frequency (Hz) of each mel band.
const std::vector<double>& MelBandCentersHz();

// Linear STFT magnitudes, (T x kFftSize/2+1) row-major, Hann window,
// reflect centre padding. Throws DataError on audio shorter than a window.
std::vector<double> StftMagnitude(std::span<const float> audio, int64_t* num_frames);

// T x 80 log mel magnitudes: ln(max(mel, kLogFloor)).
Tensor ExtractMel(std::span<const float> audio);

struct PitchTrack {
  std::vector<double> hz;     // 0 on unvoiced frames
  std::vector<char> voiced;
};

struct PitchOptions {
  double fmin = 60.0;
  double fmax = 500.0;
  double voicing_threshold = 0.3;  // on the normalised cross-correlation peak
};

// Normalised cross-correlation pitch tracker, one estimate per mel frame.
PitchTrack EstimateF0(std::span<const float> audio, const PitchOptions& opts = {});

// Per-frame L2 norm of the linear STFT magnitude, one value per mel frame.
std::vector<double> FrameEnergy(std::span<const float> audio);

// Mean of `values` over consecutive spans of `durations` frames. Throws
// DataError unless the durations sum to values.size().
std::vector<double> PhonemeAverage(std::span<const double> values,
                                   std::span<const int> durations);

// Voiced-only mean per span; spans without a voiced frame report has_voiced
// false and value 0.
struct VoicedAverage {
  std::vector<double> value;
  std::vector<char> has_voiced;
};
VoicedAverage PhonemeAverageVoiced(std::span<const double> f0, std::span<const char> voiced,
                                   std::span<const int> durations);

struct SpeakerStats {
  std::string speaker_id;
  double f0_mean = 0.0;
  double f0_std = 1.0;
  double energy_mean = 0.0;
  double energy_std = 1.0;
};

// Throws NumericError if a standard deviation is not positive.
void ValidateStats(const SpeakerStats& s);
double Normalize(double value, double mean, double std);
double Denormalize(double z, double mean, double std);

struct Codebook {
  int size;
  double lo;
  double hi;
};
inline constexpr Codebook kPitchCodebook{64, -4.0, 4.0};
inline constexpr Codebook kEnergyCodebook{64, -5.0, 5.0};
inline constexpr int kDurationCodebook = 32;

// clamp(round_half_away((clamp(v) - lo) / (hi - lo) * (K - 1)), 0, K - 1).
int QuantizeUnit(double v, const Codebook& cb);
double DequantizeUnit(int index, const Codebook& cb);
// clamp(frames, 1, 32) - 1; negative frames throw DataError.
int QuantizeDuration(int64_t frames);
inline int DequantizeDuration(int index) { return index + 1; }

// Per-phoneme unit streams for one utterance. Unvoiced-only spans take
// normalised pitch 0.
struct UnitSequence {
  std::vector<int> duration;
  std::vector<int> pitch;
  std::vector<int> energy;
  int64_t size() const { return static_cast<int64_t>(duration.size()); }
};
UnitSequence ExtractUnits(std::span<const int> durations, std::span<const double> f0,
                          std::span<const char> voiced, std::span<const double> energy,
                          const SpeakerStats& stats);

}  // namespace sftts::dsp

#endif  // SFTTS_DSP_FEATURES_H_
