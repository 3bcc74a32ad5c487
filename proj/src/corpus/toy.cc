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

#include "sftts/corpus/toy.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

#include "sftts/common/error.h"

namespace sftts::corpus {
namespace {

using dsp::kNumMels;

// Symbols per language; the trailing ones are unvoiced.
constexpr std::array<const char*, 12> kAlphabetA = {"a", "e", "i", "o", "u", "m",
                                                    "n", "l", "r", "p", "t", "s"};
constexpr int kUnvoicedA = 3;
constexpr std::array<const char*, 10> kAlphabetB = {"A", "E", "O", "U", "N",
                                                    "M", "V", "Z", "K", "F"};
constexpr int kUnvoicedB = 2;

// Deterministic family patterns, indexed by position.
constexpr std::array<double, 5> kPitchPattern = {0.0, 0.12, -0.08, 0.06, -0.12};
constexpr std::array<double, 3> kGainPattern = {0.0, 0.3, -0.3};

std::string Exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string StyleTag(const std::string& style) {
  if (style == kStyleNeutral) return "neu";
  if (style == kStyleExpressive) return "exp";
  if (style == kStyleDeterministic) return "det";
  throw UsageError("toy corpus: unknown style '" + style + "'");
}

}  // namespace

std::string ToySpec::Format() const {
  std::string st;
  for (size_t i = 0; i < styles.size(); ++i) st += (i ? "," : "") + styles[i];
  std::ostringstream os;
  os << "seed=" << seed << " speakers_per_language=" << speakers_per_language
     << " utterances=" << utterances_per_speaker_style << " styles=" << st
     << " min_phonemes=" << min_phonemes << " max_phonemes=" << max_phonemes
     << " ripple=" << Exact(ripple) << " noise=" << Exact(mel_noise_std)
     << " val=" << Exact(val_fraction) << " test=" << Exact(test_fraction);
  return os.str();
}

ToySpec ToySpec::Parse(const std::string& line) {
  ToySpec s;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw UsageError("toy spec: malformed token '" + tok + "'");
    const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
    try {
      if (k == "seed") {
        s.seed = std::stoull(v);
      } else if (k == "speakers_per_language") {
        s.speakers_per_language = std::stoi(v);
      } else if (k == "utterances") {
        s.utterances_per_speaker_style = std::stoi(v);
      } else if (k == "styles") {
        s.styles.clear();
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) s.styles.push_back(item);
      } else if (k == "min_phonemes") {
        s.min_phonemes = std::stoi(v);
      } else if (k == "max_phonemes") {
        s.max_phonemes = std::stoi(v);
      } else if (k == "ripple") {
        s.ripple = std::stod(v);
      } else if (k == "noise") {
        s.mel_noise_std = std::stod(v);
      } else if (k == "val") {
        s.val_fraction = std::stod(v);
      } else if (k == "test") {
        s.test_fraction = std::stod(v);
      } else {
        throw UsageError("toy spec: unknown key '" + k + "'");
      }
    } catch (const std::logic_error&) {
      throw UsageError("toy spec: bad value for '" + k + "'");
    }
  }
  s.Validate();
  return s;
}

void ToySpec::Validate() const {
  if (speakers_per_language < 1 || utterances_per_speaker_style < 1) {
    throw UsageError("toy spec: need at least one speaker and one utterance per cell");
  }
  if (min_phonemes < 1 || max_phonemes < min_phonemes) {
    throw UsageError("toy spec: invalid phoneme count range");
  }
  if (styles.empty()) throw UsageError("toy spec: no styles");
  for (const auto& st : styles) StyleTag(st);
  if (!(mel_noise_std >= 0) || !(ripple >= 0)) throw UsageError("toy spec: negative amplitude");
  if (!(val_fraction >= 0) || !(test_fraction >= 0) || val_fraction + test_fraction >= 1) {
    throw UsageError("toy spec: split fractions must be nonnegative and sum below 1");
  }
}

ToyWorld::ToyWorld(const ToySpec& spec) : spec_(spec) {
  spec_.Validate();
  for (int i = 0; i < static_cast<int>(kAlphabetA.size()); ++i) {
    phonemes_.push_back({kAlphabetA[i], 0, i < static_cast<int>(kAlphabetA.size()) - kUnvoicedA});
  }
  for (int i = 0; i < static_cast<int>(kAlphabetB.size()); ++i) {
    phonemes_.push_back({kAlphabetB[i], 1, i < static_cast<int>(kAlphabetB.size()) - kUnvoicedB});
  }

  for (size_t p = 0; p < phonemes_.size(); ++p) {
    Rng rng(Rng::Derive(spec_.seed, 1000 + p));
    std::vector<double> env(kNumMels, -2.0);
    for (int bump = 0; bump < 3; ++bump) {
      const double centre = rng.Uniform(4.0, 72.0);
      const double width = rng.Uniform(3.0, 7.0);
      const double height = rng.Uniform(1.0, 3.0);
      for (int b = 0; b < kNumMels; ++b) {
        const double z = (b - centre) / width;
        env[b] += height * std::exp(-0.5 * z * z);
      }
    }
    // Equal linear-magnitude norm, so frame energy tracks the gain.
    double norm = 0.0;
    for (double v : env) norm += std::exp(2.0 * v);
    const double shift = 0.5 * std::log(norm);
    for (double& v : env) v -= shift;
    envelopes_.push_back(std::move(env));
    base_duration_.push_back(static_cast<int>(rng.UniformInt(3, 7)));
  }

  for (int lang = 0; lang < kNumLanguages; ++lang) {
    for (int k = 0; k < spec_.speakers_per_language; ++k) {
      const int idx = static_cast<int>(speakers_.size());
      Rng rng(Rng::Derive(spec_.seed, 2000 + idx));
      SpeakerInfo s;
      char id[16];
      std::snprintf(id, sizeof(id), "spk%02d", idx);
      s.id = id;
      s.language = lang;
      s.f0_base = 150.0 + std::round(rng.Uniform(-35.0, 45.0) * 10.0) / 10.0;
      s.tilt = rng.Uniform(-1.2, 1.2);
      std::vector<double> colour(kNumMels);
      double a1 = rng.Uniform(-0.2, 0.2), f1 = rng.Uniform(0.5, 1.5), p1 = rng.Uniform(0, 6.28);
      double a2 = rng.Uniform(-0.2, 0.2), f2 = rng.Uniform(0.5, 1.5), p2 = rng.Uniform(0, 6.28);
      for (int b = 0; b < kNumMels; ++b) {
        const double x = static_cast<double>(b) / (kNumMels - 1);
        colour[b] = s.tilt * (x - 0.5) + a1 * std::cos(2 * std::numbers::pi * f1 * x + p1) +
                    a2 * std::cos(2 * std::numbers::pi * f2 * x + p2);
      }
      speakers_.push_back(s);
      colour_.push_back(std::move(colour));
    }
  }

  const auto& fc = dsp::MelBandCentersHz();
  ripple_weight_.resize(kNumMels);
  for (int b = 0; b < kNumMels; ++b) {
    ripple_weight_[b] = std::clamp((1200.0 - fc[b]) / 400.0, 0.0, 1.0);
  }
}

std::vector<int> ToyWorld::Alphabet(int language) const {
  std::vector<int> ids;
  for (size_t p = 0; p < phonemes_.size(); ++p)
    if (phonemes_[p].language == language) ids.push_back(static_cast<int>(p));
  return ids;
}

int ToyWorld::SpeakerIndex(const std::string& id) const {
  for (size_t i = 0; i < speakers_.size(); ++i)
    if (speakers_[i].id == id) return static_cast<int>(i);
  throw DataError("toy world: unknown speaker '" + id + "'");
}

std::vector<double> ToyWorld::Frame(int phoneme, int speaker, double f0_hz,
                                    double log_gain) const {
  const auto& env = envelopes_[phoneme];
  const auto& col = colour_[speaker];
  const auto& fc = dsp::MelBandCentersHz();
  std::vector<double> out(kNumMels);
  const bool voiced = phonemes_[phoneme].voiced && f0_hz > 0;
  for (int b = 0; b < kNumMels; ++b) {
    double v = env[b] + col[b] + log_gain;
    if (voiced && ripple_weight_[b] > 0) {
      v += spec_.ripple * ripple_weight_[b] * std::cos(2.0 * std::numbers::pi * fc[b] / f0_hz);
    }
    out[b] = v;
  }
  return out;
}

ToyUtterance GenerateUtterance(const ToyWorld& world, int speaker, const std::string& style,
                               int index) {
  const ToySpec& spec = world.spec();
  const SpeakerInfo& spk = world.speakers().at(speaker);
  char num[16];
  std::snprintf(num, sizeof(num), "%04d", index);
  ToyUtterance out;
  Utterance& u = out.utt;
  u.id = spk.id + "_" + StyleTag(style) + "_" + num;
  u.speaker = spk.id;
  u.language = spk.language;
  u.style = style;

  Rng rng(Rng::Derive(spec.seed, Fnv1a(u.id)));
  const bool det = style == kStyleDeterministic;
  const bool expressive = style == kStyleExpressive;
  const std::vector<int> alphabet = world.Alphabet(spk.language);
  const int n = static_cast<int>(rng.UniformInt(spec.min_phonemes, spec.max_phonemes));
  for (int i = 0; i < n; ++i) {
    u.phonemes.push_back(alphabet[rng.UniformInt(0, static_cast<int64_t>(alphabet.size()) - 1)]);
  }

  for (int i = 0; i < n; ++i) {
    const int ph = u.phonemes[i];
    const double base = world.BaseDuration(ph);
    double d = base, delta = 0.0, gain = 0.0;
    if (det) {
      delta = kPitchPattern[i % kPitchPattern.size()];
      gain = kGainPattern[i % kGainPattern.size()];
    } else if (expressive) {
      const double stretch = rng.Uniform() < 0.5 ? 0.6 : 1.7;
      d = base * stretch + rng.Normal(0.0, 0.8);
      delta = (rng.Uniform() < 0.5 ? -0.16 : 0.16) + rng.Normal(0.0, 0.04);
      gain = rng.Normal(0.0, 0.3);
    } else {
      d = base + rng.Normal(0.0, 0.6);
      const double pos = n > 1 ? static_cast<double>(i) / (n - 1) : 0.5;
      delta = 0.04 * std::cos(std::numbers::pi * pos) + rng.Normal(0.0, 0.03);
      gain = rng.Normal(0.0, 0.1);
    }
    u.durations.push_back(static_cast<int>(std::clamp(std::lround(d), 1L, 32L)));
    out.log_gain.push_back(gain);
    out.phoneme_f0.push_back(world.phonemes()[ph].voiced ? spk.f0_base * (1.0 + delta) : 0.0);
  }

  int64_t frames = 0;
  for (int d : u.durations) frames += d;
  u.mel = Tensor({frames, kNumMels});
  u.f0.assign(frames, 0.f);
  u.voiced.assign(frames, 0);
  u.energy.assign(frames, 0.f);
  int64_t t = 0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < u.durations[i]; ++k, ++t) {
      double f0 = out.phoneme_f0[i];
      if (f0 > 0 && !det) f0 += rng.Normal(0.0, 0.5);
      const auto frame = world.Frame(u.phonemes[i], speaker, f0, out.log_gain[i]);
      double e2 = 0.0;
      for (int b = 0; b < kNumMels; ++b) {
        double v = frame[b];
        if (spec.mel_noise_std > 0) v += rng.Normal(0.0, spec.mel_noise_std);
        const float fv = static_cast<float>(v);
        u.mel.at(t, b) = fv;
        e2 += std::exp(2.0 * static_cast<double>(fv));
      }
      u.energy[t] = static_cast<float>(std::sqrt(e2));
      if (f0 > 0) {
        u.f0[t] = static_cast<float>(f0);
        u.voiced[t] = 1;
      }
    }
  }

  Rng split_rng(Rng::Derive(spec.seed ^ 0x5b1dULL, Fnv1a(u.id)));
  const double r = split_rng.Uniform();
  u.split = r < spec.test_fraction                       ? Split::kTest
            : r < spec.test_fraction + spec.val_fraction ? Split::kVal
                                                         : Split::kTrain;
  return out;
}

Corpus GenerateCorpus(const ToySpec& spec) {
  const ToyWorld world(spec);
  Corpus c;
  c.phonemes = world.phonemes();
  c.speakers = world.speakers();
  c.toy_spec = world.spec().Format();
  for (int s = 0; s < static_cast<int>(world.speakers().size()); ++s) {
    for (const auto& style : spec.styles) {
      for (int i = 0; i < spec.utterances_per_speaker_style; ++i) {
        c.utterances.push_back(GenerateUtterance(world, s, style, i).utt);
      }
    }
  }
  std::sort(c.utterances.begin(), c.utterances.end(),
            [](const Utterance& a, const Utterance& b) { return a.id < b.id; });
  c.stats = ComputeSpeakerStats(c);
  Validate(c);
  return c;
}

// ---------------------------------------------------------------- oracles

namespace {

constexpr double kOracleFmin = 70.0;
constexpr double kOracleFmax = 400.0;
constexpr double kOracleStep = 0.25;
constexpr double kSmoothSigma = 2.0;  // bands

// x minus its Gaussian-smoothed self, restricted to `bands`.
std::vector<double> HighPass(const std::vector<double>& x, const std::vector<int>& bands) {
  std::vector<double> y(bands.size());
  for (size_t i = 0; i < bands.size(); ++i) {
    double num = 0.0, den = 0.0;
    for (size_t j = 0; j < bands.size(); ++j) {
      const double z = (bands[i] - bands[j]) / kSmoothSigma;
      const double w = std::exp(-0.5 * z * z);
      num += w * x[j];
      den += w;
    }
    y[i] = x[i] - num / den;
  }
  return y;
}

}  // namespace

ToyOracle::ToyOracle(const ToyWorld& world) : world_(world) {
  const auto& fc = dsp::MelBandCentersHz();
  for (int b = 0; b < kNumMels; ++b)
    if (world.RippleWeights()[b] > 0) bands_.push_back(b);
  for (double f = kOracleFmin; f <= kOracleFmax + 1e-9; f += kOracleStep) {
    std::vector<double> p(bands_.size());
    for (size_t i = 0; i < bands_.size(); ++i) {
      const int b = bands_[i];
      p[i] = world.RippleWeights()[b] * std::cos(2.0 * std::numbers::pi * fc[b] / f);
    }
    std::vector<double> hp = HighPass(p, bands_);
    double norm = 0.0;
    for (double v : hp) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : hp) v /= norm;
    // Keep the raw high-passed norm to turn projections into amplitudes.
    hp.push_back(norm);
    candidates_hz_.push_back(f);
    patterns_.push_back(std::move(hp));
  }
}

int ToyOracle::ClassifyFrame(const float* frame, int language) const {
  // Least squares against [1, ramp]: residual SS after removing offset/tilt.
  double best_ss = 1e300;
  int best = -1;
  for (int p = 0; p < static_cast<int>(world_.phonemes().size()); ++p) {
    if (language >= 0 && world_.phonemes()[p].language != language) continue;
    const auto& env = world_.Envelope(p);
    double s0 = 0, s1 = 0, s11 = 0, s_r = 0, s_r1 = 0, s_rr = 0;
    for (int b = 0; b < kNumMels; ++b) {
      const double x = static_cast<double>(b) / (kNumMels - 1) - 0.5;
      const double r = frame[b] - env[b];
      s0 += 1;
      s1 += x;
      s11 += x * x;
      s_r += r;
      s_r1 += r * x;
      s_rr += r * r;
    }
    const double det = s0 * s11 - s1 * s1;
    const double c0 = (s_r * s11 - s1 * s_r1) / det;
    const double c1 = (s0 * s_r1 - s1 * s_r) / det;
    const double ss = s_rr - c0 * s_r - c1 * s_r1;
    if (ss < best_ss) {
      best_ss = ss;
      best = p;
    }
  }
  return best;
}

dsp::PitchTrack ToyOracle::EstimateF0(const Tensor& mel) const {
  if (mel.rank() != 2 || mel.dim(1) != kNumMels) {
    throw ShapeError("toy oracle: mel must be T x 80, got " + ShapeString(mel.shape()));
  }
  const int64_t frames = mel.dim(0);
  dsp::PitchTrack track;
  track.hz.assign(frames, 0.0);
  track.voiced.assign(frames, 0);
  std::vector<double> residual(bands_.size());
  for (int64_t t = 0; t < frames; ++t) {
    const float* row = mel.data() + t * kNumMels;
    const int ph = ClassifyFrame(row, -1);
    const auto& env = world_.Envelope(ph);
    for (size_t i = 0; i < bands_.size(); ++i) residual[i] = row[bands_[i]] - env[bands_[i]];
    const std::vector<double> hp = HighPass(residual, bands_);
    double hp_norm = 0.0;
    for (double v : hp) hp_norm += v * v;
    hp_norm = std::sqrt(hp_norm);
    if (hp_norm < 1e-9) continue;
    std::vector<double> score(patterns_.size());
    size_t best = 0;
    for (size_t c = 0; c < patterns_.size(); ++c) {
      double acc = 0.0;
      for (size_t i = 0; i < hp.size(); ++i) acc += hp[i] * patterns_[c][i];
      score[c] = acc;
      if (acc > score[best]) best = c;
    }
    const double corr = score[best] / hp_norm;
    const double amplitude = score[best] / patterns_[best].back();
    if (corr < 0.5 || amplitude < 0.3 * world_.spec().ripple) continue;
    double f = candidates_hz_[best];
    if (best > 0 && best + 1 < score.size()) {
      const double a = score[best - 1], b = score[best], c = score[best + 1];
      const double den = a - 2 * b + c;
      if (std::abs(den) > 1e-12) f += std::clamp(0.5 * (a - c) / den, -0.5, 0.5) * kOracleStep;
    }
    track.hz[t] = f;
    track.voiced[t] = 1;
  }
  return track;
}

// ---------------------------------------------------------------- render

std::vector<float> RenderWaveform(const ToyWorld& world, const ToyUtterance& tu, uint64_t seed) {
  const Utterance& u = tu.utt;
  const int speaker = world.SpeakerIndex(u.speaker);
  const int64_t frames = u.frames();
  const int64_t samples = frames * dsp::kHop;
  const auto& fc = dsp::MelBandCentersHz();
  constexpr double kTopHz = 7800.0;
  const int max_harm = static_cast<int>(kTopHz / 60.0);

  // Per frame: smooth log envelope (no ripple: the harmonics are the ripple).
  std::vector<int> phone_of(frames);
  std::vector<double> gain_of(frames);
  {
    int64_t t = 0;
    for (size_t i = 0; i < u.durations.size(); ++i)
      for (int k = 0; k < u.durations[i]; ++k, ++t) {
        phone_of[t] = u.phonemes[i];
        gain_of[t] = tu.log_gain[i];
      }
  }
  auto log_env_at = [&](int64_t t, double hz) {
    const auto& env = world.Envelope(phone_of[t]);
    const auto& col = world.SpeakerColour(speaker);
    auto at = [&](int b) { return env[b] + col[b] + gain_of[t]; };
    if (hz <= fc.front()) return at(0);
    if (hz >= fc.back()) return at(kNumMels - 1);
    const int hi = static_cast<int>(std::upper_bound(fc.begin(), fc.end(), hz) - fc.begin());
    const double w = (hz - fc[hi - 1]) / (fc[hi] - fc[hi - 1]);
    return (1 - w) * at(hi - 1) + w * at(hi);
  };

  std::vector<std::vector<double>> amp(frames, std::vector<double>(max_harm + 1, 0.0));
  std::vector<double> noise_amp(frames, 0.0);
  for (int64_t t = 0; t < frames; ++t) {
    const double f0 = u.voiced[t] ? u.f0[t] : 0.0;
    if (f0 > 0) {
      for (int k = 1; k <= max_harm && k * f0 < kTopHz; ++k)
        amp[t][k] = std::exp(log_env_at(t, k * f0));
    } else {
      noise_amp[t] = 0.3 * std::exp(log_env_at(t, 3000.0));
    }
  }

  Rng rng(seed);
  std::vector<double> y(samples, 0.0);
  double phase = 0.0;
  for (int64_t n = 0; n < samples; ++n) {
    const double pos = static_cast<double>(n) / dsp::kHop;
    const int64_t t0 = std::min<int64_t>(static_cast<int64_t>(pos), frames - 1);
    const int64_t t1 = std::min<int64_t>(t0 + 1, frames - 1);
    const double w = pos - t0;
    double f0 = 0.0;
    const double a = u.voiced[t0] ? u.f0[t0] : 0.0, b = u.voiced[t1] ? u.f0[t1] : 0.0;
    if (a > 0 && b > 0) f0 = (1 - w) * a + w * b;
    else if (a > 0) f0 = a;
    else if (b > 0 && w > 0.5) f0 = b;
    double s = 0.0;
    if (f0 > 0) {
      phase += 2.0 * std::numbers::pi * f0 / dsp::kSampleRate;
      if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
      for (int k = 1; k <= max_harm; ++k) {
        const double ak = (1 - w) * amp[t0][k] + w * amp[t1][k];
        if (ak == 0.0) continue;
        s += ak * std::sin(k * phase);
      }
    }
    s += ((1 - w) * noise_amp[t0] + w * noise_amp[t1]) * rng.Normal();
    y[n] = s;
  }
  double peak = 1e-12;
  for (double v : y) peak = std::max(peak, std::abs(v));
  std::vector<float> out(samples);
  for (int64_t n = 0; n < samples; ++n) out[n] = static_cast<float>(0.8 * y[n] / peak);
  return out;
}

}  // namespace sftts::corpus
