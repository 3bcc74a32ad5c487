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

#include "sftts/dsp/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "sftts/common/error.h"

namespace sftts::dsp {
namespace {

constexpr int kBins = kFftSize / 2 + 1;

// Slaney mel scale: linear below 1 kHz, logarithmic above.
double HzToMel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / f_sp;
  return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double MelToHz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * f_sp;
  return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

const std::vector<double>& HannWindow() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kFftSize);
    for (int n = 0; n < kFftSize; ++n)
      v[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / kFftSize);
    return v;
  }();
  return w;
}

struct FftwBuffers {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  FftwBuffers()
      : in(fftw_alloc_real(kFftSize)), out(fftw_alloc_complex(kBins)) {}
  ~FftwBuffers() {
    fftw_free(in);
    fftw_free(out);
  }
  FftwBuffers(const FftwBuffers&) = delete;
  FftwBuffers& operator=(const FftwBuffers&) = delete;
};

// Planning is not thread-safe in FFTW; execution on fresh aligned buffers is.
fftw_plan SharedPlan() {
  static std::mutex mu;
  static fftw_plan plan = nullptr;
  std::lock_guard<std::mutex> lock(mu);
  if (plan == nullptr) {
    FftwBuffers tmp;
    plan = fftw_plan_dft_r2c_1d(kFftSize, tmp.in, tmp.out, FFTW_ESTIMATE);
  }
  return plan;
}

// Reflect-padded copy: kFftSize/2 samples on each side.
std::vector<double> CenterPad(std::span<const float> audio) {
  const int64_t n = static_cast<int64_t>(audio.size());
  const int64_t pad = kFftSize / 2;
  if (n < kFftSize) {
    throw DataError("audio: " + std::to_string(n) + " samples is shorter than one window (" +
                    std::to_string(kFftSize) + ")");
  }
  std::vector<double> out(static_cast<size_t>(n + 2 * pad));
  for (int64_t i = 0; i < n + 2 * pad; ++i) {
    int64_t j = i - pad;
    if (j < 0) j = -j;
    if (j >= n) j = 2 * (n - 1) - j;
    out[i] = audio[j];
  }
  return out;
}

std::vector<double> MelEdgesHz() {
  const double mel_lo = HzToMel(0.0), mel_hi = HzToMel(kMelFmax);
  std::vector<double> edges(kNumMels + 2);
  for (int i = 0; i < kNumMels + 2; ++i)
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (kNumMels + 1));
  return edges;
}

}  // namespace

const std::vector<double>& MelBandCentersHz() {
  static const std::vector<double> c = [] {
    const auto e = MelEdgesHz();
    return std::vector<double>(e.begin() + 1, e.end() - 1);
  }();
  return c;
}

const std::vector<double>& MelFilterbank() {
  static const std::vector<double> fb = [] {
    std::vector<double> w(static_cast<size_t>(kNumMels) * kBins, 0.0);
    const std::vector<double> edges = MelEdgesHz();
    for (int m = 0; m < kNumMels; ++m) {
      const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
      const double enorm = 2.0 / (hi - lo);
      for (int k = 0; k < kBins; ++k) {
        const double f = static_cast<double>(k) * kSampleRate / kFftSize;
        const double up = (f - lo) / (mid - lo), down = (hi - f) / (hi - mid);
        w[static_cast<size_t>(m) * kBins + k] = enorm * std::max(0.0, std::min(up, down));
      }
    }
    return w;
  }();
  return fb;
}

std::vector<double> StftMagnitude(std::span<const float> audio, int64_t* num_frames) {
  const std::vector<double> padded = CenterPad(audio);
  const int64_t frames = NumFrames(static_cast<int64_t>(audio.size()));
  const auto& win = HannWindow();
  std::vector<double> mag(static_cast<size_t>(frames) * kBins);
  fftw_plan plan = SharedPlan();
  FftwBuffers buf;
  for (int64_t t = 0; t < frames; ++t) {
    const double* src = padded.data() + t * kHop;
    for (int n = 0; n < kFftSize; ++n) buf.in[n] = src[n] * win[n];
    fftw_execute_dft_r2c(plan, buf.in, buf.out);
    for (int k = 0; k < kBins; ++k)
      mag[t * kBins + k] = std::hypot(buf.out[k][0], buf.out[k][1]);
  }
  *num_frames = frames;
  return mag;
}

Tensor ExtractMel(std::span<const float> audio) {
  int64_t frames = 0;
  const std::vector<double> mag = StftMagnitude(audio, &frames);
  const auto& fb = MelFilterbank();
  Tensor mel({frames, kNumMels});
  for (int64_t t = 0; t < frames; ++t) {
    const double* row = mag.data() + t * kBins;
    for (int m = 0; m < kNumMels; ++m) {
      const double* f = fb.data() + static_cast<size_t>(m) * kBins;
      double acc = 0.0;
      for (int k = 0; k < kBins; ++k) acc += f[k] * row[k];
      mel.at(t, m) = static_cast<float>(std::log(std::max(acc, kLogFloor)));
    }
  }
  return mel;
}

PitchTrack EstimateF0(std::span<const float> audio, const PitchOptions& opts) {
  const std::vector<double> padded = CenterPad(audio);
  const int64_t frames = NumFrames(static_cast<int64_t>(audio.size()));
  const int lag_lo = std::max(2, static_cast<int>(std::floor(kSampleRate / opts.fmax)));
  const int lag_hi = static_cast<int>(std::ceil(kSampleRate / opts.fmin));
  if (lag_hi + 2 >= kFftSize) throw UsageError("pitch: fmin too low for the analysis window");
  const int width = kFftSize - lag_hi - 1;

  PitchTrack track;
  track.hz.assign(frames, 0.0);
  track.voiced.assign(frames, 0);
  std::vector<double> seg(kFftSize), r(lag_hi + 2, 0.0);
  for (int64_t t = 0; t < frames; ++t) {
    const double* src = padded.data() + t * kHop;
    double mean = 0.0;
    for (int n = 0; n < kFftSize; ++n) mean += src[n];
    mean /= kFftSize;
    for (int n = 0; n < kFftSize; ++n) seg[n] = src[n] - mean;

    double e0 = 0.0;
    for (int n = 0; n < width; ++n) e0 += seg[n] * seg[n];
    if (e0 < 1e-9 * width) continue;  // silence
    // Energy of the lagged window, slid incrementally.
    double el = 0.0;
    for (int n = lag_lo - 1; n < lag_lo - 1 + width; ++n) el += seg[n] * seg[n];
    for (int lag = lag_lo - 1; lag <= lag_hi + 1; ++lag) {
      if (lag > lag_lo - 1) {
        el += seg[lag + width - 1] * seg[lag + width - 1] - seg[lag - 1] * seg[lag - 1];
      }
      double acc = 0.0;
      for (int n = 0; n < width; ++n) acc += seg[n] * seg[n + lag];
      r[lag] = acc / std::sqrt(e0 * std::max(el, 1e-300));
    }
    double best = -1.0;
    for (int lag = lag_lo; lag <= lag_hi; ++lag) best = std::max(best, r[lag]);
    if (best < opts.voicing_threshold) continue;
    // Shortest lag whose local peak is close to the global one: avoids
    // picking a multiple of the period.
    int pick = -1;
    for (int lag = lag_lo; lag <= lag_hi; ++lag) {
      if (r[lag] >= 0.9 * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
        pick = lag;
        break;
      }
    }
    if (pick < 0) continue;
    const double a = r[pick - 1], b = r[pick], c = r[pick + 1];
    const double denom = a - 2.0 * b + c;
    const double delta = std::abs(denom) > 1e-12 ? 0.5 * (a - c) / denom : 0.0;
    track.hz[t] = kSampleRate / (pick + std::clamp(delta, -0.5, 0.5));
    track.voiced[t] = 1;
  }
  return track;
}

std::vector<double> FrameEnergy(std::span<const float> audio) {
  int64_t frames = 0;
  const std::vector<double> mag = StftMagnitude(audio, &frames);
  std::vector<double> energy(frames);
  for (int64_t t = 0; t < frames; ++t) {
    double acc = 0.0;
    for (int k = 0; k < kBins; ++k) acc += mag[t * kBins + k] * mag[t * kBins + k];
    energy[t] = std::sqrt(acc);
  }
  return energy;
}

namespace {

void CheckSpans(std::span<const int> durations, size_t frames) {
  int64_t total = 0;
  for (int d : durations) {
    if (d < 0) throw DataError("phoneme spans: negative duration");
    total += d;
  }
  if (total != static_cast<int64_t>(frames)) {
    throw DataError("phoneme spans cover " + std::to_string(total) + " frames, sequence has " +
                    std::to_string(frames));
  }
}

}  // namespace

std::vector<double> PhonemeAverage(std::span<const double> values,
                                   std::span<const int> durations) {
  CheckSpans(durations, values.size());
  std::vector<double> out;
  out.reserve(durations.size());
  size_t pos = 0;
  for (int d : durations) {
    if (d == 0) throw DataError("phoneme spans: empty span cannot be averaged");
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += values[pos + i];
    out.push_back(acc / d);
    pos += d;
  }
  return out;
}

VoicedAverage PhonemeAverageVoiced(std::span<const double> f0, std::span<const char> voiced,
                                   std::span<const int> durations) {
  if (f0.size() != voiced.size()) throw DataError("pitch: f0 and voicing lengths differ");
  CheckSpans(durations, f0.size());
  VoicedAverage out;
  size_t pos = 0;
  for (int d : durations) {
    double acc = 0.0;
    int count = 0;
    for (int i = 0; i < d; ++i) {
      if (voiced[pos + i]) {
        acc += f0[pos + i];
        ++count;
      }
    }
    out.value.push_back(count > 0 ? acc / count : 0.0);
    out.has_voiced.push_back(count > 0 ? 1 : 0);
    pos += d;
  }
  return out;
}

void ValidateStats(const SpeakerStats& s) {
  if (!(s.f0_std > 0.0) || !(s.energy_std > 0.0)) {
    throw NumericError("speaker '" + s.speaker_id + "': degenerate statistics (std must be > 0)");
  }
}

double Normalize(double value, double mean, double std) {
  if (!(std > 0.0)) throw NumericError("normalize: std must be positive");
  return (value - mean) / std;
}

double Denormalize(double z, double mean, double std) {
  if (!(std > 0.0)) throw NumericError("denormalize: std must be positive");
  return z * std + mean;
}

int QuantizeUnit(double v, const Codebook& cb) {
  if (!std::isfinite(v)) throw NumericError("quantize: non-finite value");
  if (cb.size < 2 || !(cb.lo < cb.hi)) throw UsageError("quantize: invalid codebook");
  const double c = std::clamp(v, cb.lo, cb.hi);
  // std::round rounds halves away from zero.
  const double idx = std::round((c - cb.lo) / (cb.hi - cb.lo) * (cb.size - 1));
  return std::clamp(static_cast<int>(idx), 0, cb.size - 1);
}

double DequantizeUnit(int index, const Codebook& cb) {
  if (index < 0 || index >= cb.size) throw DataError("dequantize: index out of range");
  return cb.lo + index * (cb.hi - cb.lo) / (cb.size - 1);
}

int QuantizeDuration(int64_t frames) {
  if (frames < 0) throw DataError("duration: negative frame count");
  return static_cast<int>(std::clamp<int64_t>(frames, 1, kDurationCodebook)) - 1;
}

UnitSequence ExtractUnits(std::span<const int> durations, std::span<const double> f0,
                          std::span<const char> voiced, std::span<const double> energy,
                          const SpeakerStats& stats) {
  ValidateStats(stats);
  if (energy.size() != f0.size()) throw DataError("units: energy and f0 lengths differ");
  const VoicedAverage pitch = PhonemeAverageVoiced(f0, voiced, durations);
  CheckSpans(durations, energy.size());
  UnitSequence u;
  size_t pos = 0;
  for (size_t i = 0; i < durations.size(); ++i) {
    const int d = durations[i];
    u.duration.push_back(QuantizeDuration(d));
    const double zp =
        pitch.has_voiced[i] ? Normalize(pitch.value[i], stats.f0_mean, stats.f0_std) : 0.0;
    u.pitch.push_back(QuantizeUnit(zp, kPitchCodebook));
    // Zero-length spans reuse the neighbouring frame's energy.
    double acc = 0.0;
    if (d > 0) {
      for (int k = 0; k < d; ++k) acc += energy[pos + k];
      acc /= d;
    } else {
      acc = energy[std::min(pos, energy.size() - 1)];
    }
    u.energy.push_back(
        QuantizeUnit(Normalize(acc, stats.energy_mean, stats.energy_std), kEnergyCodebook));
    pos += d;
  }
  return u;
}

}  // namespace sftts::dsp
