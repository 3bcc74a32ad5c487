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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "sftts/common/error.h"
#include "sftts/corpus/corpus.h"
#include "sftts/corpus/matrix_file.h"
#include "sftts/corpus/toy.h"

namespace sftts::corpus {
namespace {
namespace fs = std::filesystem;

ToySpec SmallSpec() {
  ToySpec s;
  s.seed = 77;
  s.speakers_per_language = 2;
  s.utterances_per_speaker_style = 12;
  return s;
}

fs::path TempDir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("sftts_corpus_test_" + name);
  fs::remove_all(p);
  return p;
}

void ExpectSameUtterance(const Utterance& a, const Utterance& b) {
  EXPECT_EQ(a.id, b.id);
  EXPECT_EQ(a.speaker, b.speaker);
  EXPECT_EQ(a.language, b.language);
  EXPECT_EQ(a.style, b.style);
  EXPECT_EQ(a.split, b.split);
  EXPECT_EQ(a.phonemes, b.phonemes);
  EXPECT_EQ(a.durations, b.durations);
  EXPECT_TRUE(a.mel == b.mel) << a.id;
  EXPECT_EQ(a.f0, b.f0);
  EXPECT_EQ(a.voiced, b.voiced);
  EXPECT_EQ(a.energy, b.energy);
}

TEST(ToyCorpus, SameSeedIsBitIdentical) {
  const Corpus a = GenerateCorpus(SmallSpec()), b = GenerateCorpus(SmallSpec());
  ASSERT_EQ(a.utterances.size(), b.utterances.size());
  for (size_t i = 0; i < a.utterances.size(); ++i) ExpectSameUtterance(a.utterances[i], b.utterances[i]);
  ToySpec other = SmallSpec();
  other.seed = 78;
  EXPECT_FALSE(GenerateCorpus(other).utterances[0].mel == a.utterances[0].mel);
}

TEST(ToyCorpus, AlignmentsCoverEveryFrame) {
  const Corpus c = GenerateCorpus(SmallSpec());
  EXPECT_EQ(c.utterances.size(), 2u * 2 * 2 * 12);
  for (const auto& u : c.utterances) {
    int64_t total = 0;
    for (int d : u.durations) {
      EXPECT_GE(d, 1);
      total += d;
    }
    EXPECT_EQ(total, u.frames());
    const auto units = UnitsFor(c, u);
    EXPECT_EQ(units.duration.size(), u.phonemes.size());
    EXPECT_EQ(units.pitch.size(), u.phonemes.size());
    EXPECT_EQ(units.energy.size(), u.phonemes.size());
  }
}

TEST(ToyCorpus, AlphabetsAreDisjoint) {
  const ToyWorld w(SmallSpec());
  const auto a = w.Alphabet(0), b = w.Alphabet(1);
  EXPECT_EQ(a.size(), 12u);
  EXPECT_EQ(b.size(), 10u);
  std::set<std::string> sa, sb;
  for (int p : a) sa.insert(w.phonemes()[p].symbol);
  for (int p : b) sb.insert(w.phonemes()[p].symbol);
  for (const auto& s : sa) EXPECT_EQ(sb.count(s), 0u) << s;
  const Corpus c = GenerateCorpus(SmallSpec());
  for (const auto& u : c.utterances)
    for (int p : u.phonemes) EXPECT_EQ(c.phonemes[p].language, u.language);
}

TEST(ToyCorpus, NeutralDurationsAreNarrowerThanExpressive) {
  ToySpec s = SmallSpec();
  s.utterances_per_speaker_style = 120;
  const ToyWorld w(s);
  auto stddev = [&](const std::string& style) {
    std::vector<double> rel;
    for (int i = 0; rel.size() < 1000; ++i) {
      const auto tu = GenerateUtterance(w, i % 4, style, i);
      for (size_t k = 0; k < tu.utt.durations.size() && rel.size() < 1000; ++k)
        rel.push_back(tu.utt.durations[k] - w.BaseDuration(tu.utt.phonemes[k]));
    }
    double m = 0, v = 0;
    for (double x : rel) m += x;
    m /= rel.size();
    for (double x : rel) v += (x - m) * (x - m);
    return std::sqrt(v / rel.size());
  };
  const double neutral = stddev(kStyleNeutral), expressive = stddev(kStyleExpressive);
  EXPECT_LT(neutral, expressive);
  RecordProperty("neutral_duration_std", std::to_string(neutral));
  RecordProperty("expressive_duration_std", std::to_string(expressive));
}

TEST(ToyCorpus, SpeakerF0OffsetsAreRecoverable) {
  ToySpec s = SmallSpec();
  s.utterances_per_speaker_style = 60;
  const Corpus c = GenerateCorpus(s);
  for (const auto& spk : c.speakers) {
    const auto& st = c.stats.at(spk.id);
    EXPECT_NEAR(st.f0_mean, spk.f0_base, 2.0) << spk.id;
    EXPECT_GT(st.f0_std, 0.0);
    EXPECT_GT(st.energy_std, 0.0);
  }
}

TEST(ToyCorpus, DeterministicFamilyHasFixedProsody) {
  ToySpec s = SmallSpec();
  s.styles = {kStyleDeterministic};
  s.mel_noise_std = 0.0;
  const ToyWorld w(s);
  const auto tu = GenerateUtterance(w, 0, kStyleDeterministic, 3);
  for (size_t k = 0; k < tu.utt.durations.size(); ++k)
    EXPECT_EQ(tu.utt.durations[k], w.BaseDuration(tu.utt.phonemes[k]));
}

TEST(Corpus, WriteLoadRoundTripIsExact) {
  const Corpus c = GenerateCorpus(SmallSpec());
  const auto dir = TempDir("roundtrip");
  WriteCorpus(c, dir.string(), false);
  const Corpus d = LoadCorpus(dir.string());
  ASSERT_EQ(c.utterances.size(), d.utterances.size());
  for (size_t i = 0; i < c.utterances.size(); ++i) ExpectSameUtterance(c.utterances[i], d.utterances[i]);
  EXPECT_EQ(c.toy_spec, d.toy_spec);
  ASSERT_EQ(c.stats.size(), d.stats.size());
  for (const auto& [id, s] : c.stats) {
    EXPECT_EQ(s.f0_mean, d.stats.at(id).f0_mean);
    EXPECT_EQ(s.energy_std, d.stats.at(id).energy_std);
  }
  EXPECT_EQ(ToySpec::Parse(d.toy_spec).Format(), c.toy_spec);
  const size_t total = d.InSplit(Split::kTrain).size() + d.InSplit(Split::kVal).size() +
                       d.InSplit(Split::kTest).size();
  EXPECT_EQ(total, d.utterances.size());
  EXPECT_THROW(WriteCorpus(c, dir.string(), false), UsageError);
  EXPECT_NO_THROW(WriteCorpus(c, dir.string(), true));
  fs::remove_all(dir);
}

TEST(Corpus, UnknownSchemaVersionRejected) {
  const auto dir = TempDir("schema");
  WriteCorpus(GenerateCorpus(SmallSpec()), dir.string(), false);
  std::ifstream in(dir / "manifest.txt");
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  body.replace(0, body.find('\n'), "sftts-corpus 99");
  std::ofstream(dir / "manifest.txt") << body;
  EXPECT_THROW(LoadCorpus(dir.string()), DataError);
  fs::remove_all(dir);
}

TEST(Corpus, CorruptRecordIsNamed) {
  const auto dir = TempDir("corrupt");
  const Corpus c = GenerateCorpus(SmallSpec());
  WriteCorpus(c, dir.string(), false);
  const std::string victim = c.utterances[3].id;
  std::ofstream(dir / "feats" / (victim + ".mel")) << "garbage";
  try {
    LoadCorpus(dir.string());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(victim), std::string::npos) << e.what();
  }
  fs::remove_all(dir);
}

TEST(MatrixFile, HeaderLayout) {
  const auto dir = TempDir("matrix");
  fs::create_directories(dir);
  const auto path = (dir / "m.bin").string();
  WriteI32(path, {1, 2, 3, 4, 5, 6}, {2, 3});
  std::ifstream f(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  ASSERT_EQ(bytes.size(), 4u + 4 + 4 + 4 + 2 * 8 + 6 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "SFTM");
  EXPECT_EQ(bytes[4], 1);   // version
  EXPECT_EQ(bytes[8], 3);   // dtype i32
  EXPECT_EQ(bytes[12], 2);  // rank
  EXPECT_EQ(bytes[16], 2);
  EXPECT_EQ(bytes[24], 3);
  Shape shape;
  EXPECT_EQ(ReadI32(path, &shape), (std::vector<int>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(shape, (Shape{2, 3}));
  EXPECT_THROW(ReadF32(path), DataError);
  fs::remove_all(dir);
}

TEST(ToyOracle, RecoversPhonemesAndPitchFromGroundTruthMel) {
  const ToySpec spec = SmallSpec();
  const ToyWorld w(spec);
  const ToyOracle oracle(w);
  int frames = 0, correct = 0, voiced = 0, voiced_hit = 0, unvoiced = 0, unvoiced_hit = 0;
  double abs_err = 0;
  for (int s = 0; s < 4; ++s) {
    for (int i = 0; i < 6; ++i) {
      const auto tu = GenerateUtterance(w, s, i % 2 ? kStyleExpressive : kStyleNeutral, i);
      const auto& u = tu.utt;
      const auto track = oracle.EstimateF0(u.mel);
      int64_t t = 0;
      for (size_t k = 0; k < u.durations.size(); ++k) {
        for (int j = 0; j < u.durations[k]; ++j, ++t) {
          ++frames;
          correct += oracle.ClassifyFrame(u.mel.data() + t * 80, u.language) == u.phonemes[k];
          if (u.voiced[t]) {
            ++voiced;
            if (track.voiced[t]) {
              ++voiced_hit;
              abs_err += std::abs(track.hz[t] - u.f0[t]);
            }
          } else {
            ++unvoiced;
            unvoiced_hit += !track.voiced[t];
          }
        }
      }
    }
  }
  EXPECT_GT(static_cast<double>(correct) / frames, 0.99);
  EXPECT_GT(static_cast<double>(voiced_hit) / voiced, 0.95);
  EXPECT_GT(static_cast<double>(unvoiced_hit) / unvoiced, 0.95);
  EXPECT_LT(abs_err / std::max(voiced_hit, 1), 2.0);
}

TEST(ToyRender, AudioFrontEndRecoversGroundTruthPitch) {
  const ToyWorld w(SmallSpec());
  const auto tu = GenerateUtterance(w, 1, kStyleNeutral, 0);
  const auto audio = RenderWaveform(w, tu, 9);
  ASSERT_EQ(dsp::NumFrames(static_cast<int64_t>(audio.size())), tu.utt.frames());
  const auto track = dsp::EstimateF0(audio);
  const auto mel = dsp::ExtractMel(audio);
  EXPECT_EQ(mel.dim(0), tu.utt.frames());
  int checked = 0, close = 0;
  // Interior frames of voiced runs (boundaries mix neighbouring phonemes).
  for (int64_t t = 2; t + 2 < tu.utt.frames(); ++t) {
    bool interior = true;
    for (int64_t k = t - 2; k <= t + 2; ++k)
      interior = interior && tu.utt.voiced[k] && std::abs(tu.utt.f0[k] - tu.utt.f0[t]) < 3;
    if (!interior) continue;
    ++checked;
    close += track.voiced[t] && std::abs(track.hz[t] - tu.utt.f0[t]) < 5.0;
  }
  ASSERT_GT(checked, 5);
  EXPECT_GT(static_cast<double>(close) / checked, 0.9);
}

}  // namespace
}  // namespace sftts::corpus
