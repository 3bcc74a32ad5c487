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

#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "sftts/common/error.h"
#include "sftts/corpus/toy.h"
#include "sftts/tasks/metrics.h"
#include "sftts/tasks/plot.h"
#include "sftts/tasks/synthesis.h"
#include "sftts/training/checkpoint.h"

namespace sftts::tasks {
namespace {

namespace fs = std::filesystem;

model::ModelConfig Small() {
  model::ModelConfig c;
  for (model::StackConfig* s :
       {&c.text_encoder, &c.prompt_encoder, &c.prosody, &c.generator, &c.decoder}) {
    s->hidden_dim = 32;
    s->ff_dim = 48;
    s->heads = 2;
    s->layers = 1;
  }
  c.duration_dim = c.pitch_dim = c.energy_dim = 32;
  c.film_heads = 2;
  c.mapped_style_dim = 16;
  c.noise_dim = 4;
  c.global_style_dim = 24;
  c.style_channels = 16;
  c.max_steps = 64;
  return c;
}

Tensor RandomMel(int64_t t, uint64_t seed) {
  Rng rng(seed);
  return NormalTensor({t, 80}, 1.0, rng);
}

SynthesisRequest Request(uint64_t seed) {
  SynthesisRequest r;
  r.id = "r" + std::to_string(seed);
  r.phonemes = {1, 4, 2, 7, 3};
  r.speaker_prompt = RandomMel(30, seed);
  r.seed = seed;
  return r;
}

std::vector<double> Ramp(int n, double lo, double hi) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * std::sin(0.3 * i) * i / n;
  return v;
}

TEST(F0Pcc, SelfReflectionAndErrors) {
  const std::vector<double> a = Ramp(40, 100, 220);
  EXPECT_NEAR(F0Pcc(a, a), 1.0, 1e-12);
  double mean = 0.0;
  for (double v : a) mean += v;
  mean /= a.size();
  std::vector<double> refl(a.size());
  for (size_t i = 0; i < a.size(); ++i) refl[i] = 2 * mean - a[i];
  EXPECT_NEAR(F0Pcc(a, refl), -1.0, 1e-12);
  EXPECT_THROW(F0Pcc(a, std::vector<double>(10, 150.0)), DataError);
  EXPECT_THROW(F0Pcc(a, std::vector<double>{120.0}), DataError);
}

TEST(F0Pcc, ResamplesToShorterVoicedLength) {
  // A linear contour stays linear under resampling: correlation is exact.
  std::vector<double> a(50), b(20);
  for (int i = 0; i < 50; ++i) a[i] = 100 + i;
  for (int i = 0; i < 20; ++i) b[i] = 300 - 3 * i;
  EXPECT_NEAR(F0Pcc(a, b), -1.0, 1e-12);

  dsp::PitchTrack t;
  t.hz = {0, 110, 0, 120, 130, 0, 140};
  t.voiced = {0, 1, 0, 1, 1, 0, 1};
  EXPECT_EQ(VoicedValues(t), (std::vector<double>{110, 120, 130, 140}));
  EXPECT_NEAR(F0Pcc(t, t), 1.0, 1e-12);
  EXPECT_EQ(LinearResample({0, 10}, 3), (std::vector<double>{0, 5, 10}));
}

TEST(F0Dtw, Examples) {
  const std::vector<double> a = Ramp(30, 100, 200);
  EXPECT_EQ(F0Dtw(a, a), 0.0);
  EXPECT_EQ(F0Dtw({0, 1}, {0, 0, 1, 1}), 0.0);
  EXPECT_THROW(F0Dtw({}, {1.0}), DataError);
}

TEST(F0Dtw, SymmetricAndNonNegative) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(rng.UniformInt(1, 40)), b(rng.UniformInt(1, 40));
    for (double& v : a) v = rng.Uniform(80, 300);
    for (double& v : b) v = rng.Uniform(80, 300);
    const double ab = F0Dtw(a, b), ba = F0Dtw(b, a);
    EXPECT_EQ(ab, ba);
    EXPECT_GE(ab, 0.0);
  }
}

TEST(F0Dtw, ScaleAndOffsetInvariant) {
  const std::vector<double> a = Ramp(25, 90, 180);
  std::vector<double> b(a.size());
  for (size_t i = 0; i < a.size(); ++i) b[i] = 3.0 * a[i] + 40.0;
  EXPECT_NEAR(F0Dtw(a, b), 0.0, 1e-12);
}

TEST(DurationRmse, Examples) {
  const std::vector<int> d = {3, 5, 2, 8, 1};
  EXPECT_EQ(DurationRmse(d, d), 0.0);
  std::vector<int> off = d;
  for (int& v : off) v += 1;
  EXPECT_EQ(DurationRmse(off, d), 1.0);
  EXPECT_EQ(DurationRmse({0, 0}, {3, 4}), std::sqrt(12.5));
  EXPECT_THROW(DurationRmse(d, {1, 2, 3, 4, 5, 6}), DataError);
}

TEST(Secs, SelfAndSymmetric) {
  const model::Model m(Small(), 4);
  const Embedder e = GlobalStyleEmbedder(m);
  const Tensor a = RandomMel(40, 1), b = RandomMel(35, 2);
  EXPECT_NEAR(EmbedSimilarity(a, a, e), 1.0, 1e-12);
  EXPECT_EQ(EmbedSimilarity(a, b, e), EmbedSimilarity(b, a, e));
  EXPECT_THROW(CosineSimilarity({0, 0}, {1, 0}), NumericError);
  EXPECT_NEAR(CosineSimilarity({1, 0}, {0, 2}), 0.0, 1e-15);
}

TEST(TemplateAccuracy, GroundTruthMelsClassifyWell) {
  corpus::ToySpec spec;
  spec.speakers_per_language = 1;
  spec.utterances_per_speaker_style = 3;
  spec.styles = {corpus::kStyleNeutral};
  const corpus::ToyWorld world(spec);
  const corpus::ToyOracle oracle(world);
  const corpus::ToyUtterance u = corpus::GenerateUtterance(world, 0, corpus::kStyleNeutral, 0);
  EXPECT_GT(TemplateAccuracy(oracle, u.utt.mel, u.utt.phonemes, u.utt.durations, u.utt.language),
            0.9);
  EXPECT_THROW(TemplateAccuracy(oracle, u.utt.mel, u.utt.phonemes, {1, 2}, 0), ShapeError);
}

TEST(Synthesize, RoutingIdentityIsBitwise) {
  const model::Model m(Small(), 7);
  for (uint64_t s = 0; s < 5; ++s) {
    SynthesisRequest zero = Request(s);
    SynthesisRequest same = zero;
    same.style_prompt = zero.speaker_prompt;
    const SynthesisResult a = Synthesize(m, zero), b = Synthesize(m, same);
    EXPECT_TRUE(a.mel == b.mel);
    EXPECT_EQ(a.units.pitch, b.units.pitch);
    EXPECT_FALSE(b.style_transfer);
  }
}

TEST(Synthesize, DeterministicAndLengthMatchesDurations) {
  const model::Model m(Small(), 7);
  SynthesisRequest r = Request(3);
  r.style_prompt = RandomMel(25, 99);
  const SynthesisResult a = Synthesize(m, r), b = Synthesize(m, r);
  EXPECT_TRUE(a.mel == b.mel);
  EXPECT_TRUE(a.style_transfer);
  int64_t total = 0;
  for (int d : a.durations) total += d;
  EXPECT_EQ(a.mel.dim(0), total);
  EXPECT_EQ(static_cast<int64_t>(a.pitch_proxy.size()), total);
  EXPECT_EQ(a.units.size(), 5);
}

TEST(Synthesize, CrossLingualFlagAndAlphabetCheck) {
  const model::Model m(Small(), 7);
  SynthesisRequest r = Request(1);
  r.text_language = 1;
  r.prompt_language = 0;
  const SynthesisResult out = Synthesize(m, r);
  EXPECT_TRUE(out.cross_lingual);
  r.phonemes.push_back(22);
  EXPECT_THROW(Synthesize(m, r), DataError);
  r.phonemes = {};
  EXPECT_THROW(Synthesize(m, r), DataError);
}

TEST(Synthesize, PitchOffsetsAreMonotone) {
  const model::Model m(Small(), 7);
  for (uint64_t s = 0; s < 5; ++s) {
    double prev = -1e9;
    for (int off : {-6, -4, -2, 0, 2, 4, 6}) {
      SynthesisRequest r = Request(s);
      r.sampling.greedy = true;
      r.offsets.pitch = off;
      const double mean = MeanDequantizedPitch(Synthesize(m, r).units);
      EXPECT_GT(mean, prev) << "seed " << s << " offset " << off;
      prev = mean;
    }
  }
}

TEST(Analyze, CoarseEqualsSynthesizeAndModesDiffer) {
  const model::Model m(Small(), 7);
  const SynthesisRequest r = Request(2);
  const SynthesisResult base = Synthesize(m, r);
  EXPECT_TRUE(Synthesize(m, r, model::RepresentationMode::kCoarse).mel == base.mel);
  const Tensor f = Synthesize(m, r, model::RepresentationMode::kFilterOnly).mel;
  const Tensor s = Synthesize(m, r, model::RepresentationMode::kSourceOnly).mel;
  EXPECT_FALSE(f == s);
  EXPECT_EQ(f.shape(), base.mel.shape());
}

TEST(LoadTrainedModel, RejectsMissingAndUntrained) {
  const fs::path dir = fs::temp_directory_path() / "sftts_tasks_load";
  fs::create_directories(dir);
  EXPECT_THROW(LoadTrainedModel((dir / "none.sftc").string()), DataError);
  training::Checkpoint c;
  model::RunConfig cfg;
  cfg.model = Small();
  c.config_text = cfg.Format();
  c.config_hash = cfg.Hash();
  const model::Model m(cfg.model, cfg.seed);
  training::ExportParams(m.params(), &c);
  training::SaveCheckpoint(c, (dir / "c.sftc").string());
  EXPECT_THROW(LoadTrainedModel((dir / "c.sftc").string()), DataError);
  c.step = 1;
  training::SaveCheckpoint(c, (dir / "c.sftc").string());
  const LoadedModel lm = LoadTrainedModel((dir / "c.sftc").string());
  const SynthesisRequest r = Request(4);
  EXPECT_TRUE(Synthesize(*lm.model, r).mel == Synthesize(m, r).mel);
}

TEST(Plot, WritesPngFiles) {
  const fs::path dir = fs::temp_directory_path() / "sftts_tasks_plot";
  fs::create_directories(dir);
  const std::string mel_path = (dir / "mel.png").string();
  WritePng(mel_path, RenderMel(RandomMel(12, 3)));
  const std::string f0_path = (dir / "f0.png").string();
  WritePng(f0_path, RenderContours({{100, 110, NAN, 130}, {90, 95, 99, 120}}));
  for (const std::string& p : {mel_path, f0_path}) {
    std::ifstream f(p, std::ios::binary);
    char sig[8] = {};
    f.read(sig, 8);
    EXPECT_EQ(std::string(sig + 1, 3), "PNG");
  }
  const Image img = RenderMel(RandomMel(12, 3), 2);
  EXPECT_EQ(img.width, 24);
  EXPECT_EQ(img.height, 160);
}

TEST(MetricsCsv, OneRowPerMetric) {
  const fs::path p = fs::temp_directory_path() / "sftts_metrics.csv";
  WriteMetricsCsv(p.string(), {{"a", "f0_pcc", 0.5}, {"a", "secs", 0.25}});
  std::ifstream f(p);
  std::string all((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  EXPECT_EQ(all, "id,metric,value\na,f0_pcc,0.5\na,secs,0.25\n");
}

}  // namespace
}  // namespace sftts::tasks
