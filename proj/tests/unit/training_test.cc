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
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "sftts/common/error.h"
#include "sftts/corpus/toy.h"
#include "sftts/training/checkpoint.h"
#include "sftts/training/discriminator.h"
#include "sftts/training/objectives.h"
#include "sftts/training/optim.h"
#include "sftts/training/trainer.h"

namespace sftts::training {
namespace {

namespace fs = std::filesystem;

model::RunConfig SmallRun() {
  model::RunConfig r;
  model::ModelConfig& c = r.model;
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
  c.discriminator_hidden = 4;
  r.train.batch_size = 2;
  r.train.warmup = 10;
  r.train.lr_scale = 0.01;
  r.train.steps = 4;
  r.train.adv_start = 0;
  return r;
}

const corpus::Corpus& TinyCorpus() {
  static const corpus::Corpus c = [] {
    corpus::ToySpec s;
    s.speakers_per_language = 1;
    s.utterances_per_speaker_style = 2;
    s.styles = {corpus::kStyleDeterministic};
    s.val_fraction = 0;
    s.test_fraction = 0;
    return corpus::GenerateCorpus(s);
  }();
  return c;
}

Var Filled(Shape s, float v) {
  Tensor t(std::move(s));
  t.Fill(v);
  return Constant(std::move(t));
}

fs::path TempDir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("sftts_training_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Lsgan, AnalyticCases) {
  EXPECT_EQ(LsganDiscriminatorLoss(Filled({1, 4, 5}, 1.0f), Filled({1, 4, 5}, 0.0f)).value()[0], 0.0f);
  EXPECT_EQ(LsganGeneratorLoss(Filled({1, 4, 5}, 1.0f)).value()[0], 0.0f);
  EXPECT_EQ(LsganDiscriminatorLoss(Filled({1, 3, 3}, 0.5f), Filled({1, 3, 3}, 0.5f)).value()[0], 0.5f);
  EXPECT_EQ(LsganGeneratorLoss(Filled({1, 3, 3}, 0.5f)).value()[0], 0.25f);
}

TEST(Discriminator, OutputExtentMatchesStackAndShapeFormula) {
  ParamStore store;
  model::ModelConfig cfg = SmallRun().model;
  Discriminator d(store, cfg, 5);
  // Strides 1,2,2,1 with kernel 3 and padding 1: rows w -> w -> w/2 -> w/4 -> w/4,
  // bands 80 -> 80 -> 40 -> 20 -> 20.
  const std::pair<int64_t, int64_t> want[3] = {{8, 20}, {16, 20}, {32, 20}};
  Rng rng(2);
  const Var mel = Constant(NormalTensor({150, 80}, 1.0, rng));
  for (size_t w = 0; w < 3; ++w) {
    EXPECT_EQ(d.OutputExtent(d.windows()[w]), want[w]);
    const Var s = d.Score(mel, w, 3);
    EXPECT_EQ(s.shape(), (Shape{1, want[w].first, want[w].second}));
  }
  EXPECT_THROW(d.Score(mel, 2, 30), ShapeError);
}

TEST(Discriminator, CropStartIsSeededAndSkipsShortMels) {
  Rng a(9), b(9);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(CropStart(200, 64, a), CropStart(200, 64, b));
  Rng c(1);
  for (int w : {32, 64, 128}) EXPECT_EQ(CropStart(31, w, c), -1);
  EXPECT_EQ(CropStart(32, 32, c), 0);
}

TEST(MaskedL1, Contracts) {
  Rng rng(4);
  const Tensor target = NormalTensor({20, 80}, 1.0, rng);
  std::vector<char> mask(20, 1);
  for (int t = 5; t < 11; ++t) mask[t] = 0;
  EXPECT_EQ(MaskedL1(Constant(target), target, mask).value()[0], 0.0f);

  Tensor shifted = target;
  for (float& v : shifted.values()) v += 0.5f;
  EXPECT_NEAR(MaskedL1(Constant(shifted), target, mask).value()[0], 0.5f, 1e-6);

  const Var pred = Constant(NormalTensor({20, 80}, 1.0, rng));
  Tensor perturbed = target;
  for (int t = 5; t < 11; ++t) {
    for (int k = 0; k < 80; ++k) perturbed.at(t, k) += 100.0f * static_cast<float>(k + 1);
  }
  EXPECT_EQ(MaskedL1(pred, target, mask).value()[0], MaskedL1(pred, perturbed, mask).value()[0]);

  EXPECT_THROW(MaskedL1(pred, target, std::vector<char>(20, 0)), DataError);
  EXPECT_THROW(MaskedL1(pred, target, std::vector<char>(19, 1)), ShapeError);
}

TEST(PromptPlan, MaskAndHalfRule) {
  model::TrainConfig tc;
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const int64_t frames = rng.UniformInt(tc.min_frames, 400);
    const PromptPlan p = *SamplePromptPlan(frames, tc, rng);
    ASSERT_GE(p.start, 0);
    ASSERT_LE(p.start + p.length, frames);
    for (int64_t t = 0; t < frames; ++t) {
      ASSERT_EQ(p.mask[t] == 0, t >= p.start && t < p.start + p.length);
    }
    EXPECT_EQ(p.prosody_length, (p.length + 1) / 2);
    if (p.length >= 2) {
      EXPECT_LT(p.prosody_length, p.length);
    }
    EXPECT_GE(p.length, 8);
    EXPECT_LE(p.length, 256);
  }
  EXPECT_FALSE(SamplePromptPlan(tc.min_frames - 1, tc, rng).has_value());
}

TEST(PromptPlan, LengthRangeAndClamp) {
  model::TrainConfig tc;
  EXPECT_EQ(PromptLengthRange(100, tc), (std::pair<int64_t, int64_t>{25, 50}));
  EXPECT_EQ(PromptLengthRange(20, tc), (std::pair<int64_t, int64_t>{8, 10}));
  EXPECT_EQ(PromptLengthRange(2000, tc), (std::pair<int64_t, int64_t>{256, 256}));
}

TEST(PromptPlan, LengthIsUniformChiSquare) {
  // T = 100: lengths 25..50, 26 cells, df 25; chi-square critical value at
  // alpha 0.01 is 44.314.
  model::TrainConfig tc;
  Rng rng(2024);
  std::vector<int> hist(26, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++hist[SamplePromptPlan(100, tc, rng)->length - 25];
  const double expected = static_cast<double>(n) / 26.0;
  double chi2 = 0.0;
  for (int h : hist) chi2 += (h - expected) * (h - expected) / expected;
  EXPECT_LT(chi2, 44.314);
}

TEST(Noam, ValuesAndShape) {
  EXPECT_NEAR(NoamLr(1, 4000, 1.0), 3.9528e-6, 1e-9);
  EXPECT_NEAR(NoamLr(4000, 4000, 0.3), 0.3 / std::sqrt(4000.0), 1e-15);
  for (int64_t s = 1; s < 4000; ++s) ASSERT_LT(NoamLr(s, 4000, 1.0), NoamLr(s + 1, 4000, 1.0));
  for (int64_t s = 4000; s < 12000; ++s) ASSERT_GT(NoamLr(s, 4000, 1.0), NoamLr(s + 1, 4000, 1.0));
  EXPECT_THROW(NoamLr(0, 4000, 1.0), UsageError);
}

TEST(Noam, ProsodyGroupStartsAtPeak) {
  const double peak = NoamLr(4000, 4000, 1.0);
  for (int64_t s = 1; s < 4000; ++s) {
    ASSERT_GE(ProsodyLr(s, 4000, 1.0), NoamLr(s, 4000, 1.0));
    ASSERT_EQ(ProsodyLr(s, 4000, 1.0), peak);
  }
  for (int64_t s = 4000; s < 8000; ++s) ASSERT_EQ(ProsodyLr(s, 4000, 1.0), NoamLr(s, 4000, 1.0));
}

TEST(AdamW, FirstStepMovesByLrTimesSign) {
  ParamStore store;
  Var w = store.Add("w", Tensor({2, 2}), kGroupAcoustic);
  Var b = store.Add("b", Tensor({2}), kGroupAcoustic);
  Tensor g({2, 2});
  g.values()[0] = 3.0f;
  g.values()[1] = -0.5f;
  w.mutable_grad() = g;
  b.mutable_grad() = Tensor({2});
  b.mutable_grad().Fill(2.0f);
  AdamW opt(AdamWOptions{0.8, 0.99, 1e-9, 0.0});
  opt.Step(store, kGroupAcoustic, 0.01);
  EXPECT_NEAR(w.value().values()[0], -0.01f, 1e-7);
  EXPECT_NEAR(w.value().values()[1], 0.01f, 1e-7);
  EXPECT_EQ(w.value().values()[2], 0.0f);
  EXPECT_NEAR(b.value().values()[0], -0.01f, 1e-7);
  EXPECT_EQ(opt.steps().at(kGroupAcoustic), 1);
}

TEST(AdamW, DecayOnlyOnMatrices) {
  ParamStore store;
  Tensor ones({2, 2});
  ones.Fill(1.0f);
  Tensor ones_v({2});
  ones_v.Fill(1.0f);
  Var w = store.Add("w", ones, kGroupAcoustic);
  Var b = store.Add("b", ones_v, kGroupAcoustic);
  w.mutable_grad() = Tensor({2, 2});
  b.mutable_grad() = Tensor({2});
  AdamW opt(AdamWOptions{0.8, 0.99, 1e-9, 0.5});
  opt.Step(store, kGroupAcoustic, 0.1);
  EXPECT_NEAR(w.value().values()[0], 0.95f, 1e-7);
  EXPECT_EQ(b.value().values()[0], 1.0f);
}

TEST(ClipGradNorm, RescalesAndRejectsNonFinite) {
  ParamStore store;
  Var a = store.Add("a", Tensor({2}), kGroupAcoustic);
  Var p = store.Add("p", Tensor({1}), kGroupProsody);
  Var d = store.Add("d", Tensor({1}), kGroupDiscriminator);
  a.mutable_grad() = Tensor({2});
  a.mutable_grad().values()[0] = 3.0f;
  p.mutable_grad() = Tensor({1});
  p.mutable_grad().values()[0] = 4.0f;
  d.mutable_grad() = Tensor({1});
  d.mutable_grad().values()[0] = 100.0f;
  EXPECT_NEAR(ClipGradNorm(store, {kGroupAcoustic, kGroupProsody}, 1.0), 5.0, 1e-12);
  EXPECT_NEAR(a.grad().values()[0], 0.6f, 1e-7);
  EXPECT_NEAR(p.grad().values()[0], 0.8f, 1e-7);
  EXPECT_EQ(d.grad().values()[0], 100.0f);
  d.mutable_grad().values()[0] = std::nanf("");
  EXPECT_THROW(ClipGradNorm(store, {kGroupDiscriminator}, 1.0), NumericError);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const fs::path dir = TempDir("roundtrip");
  Checkpoint c;
  c.config_hash = 0x1234abcdULL;
  c.config_text = "seed = 3\n";
  c.step = 77;
  c.rng_state = "1 2 3";
  c.scalars["adam.step/acoustic"] = 77;
  Rng rng(1);
  c.Put("param/a", NormalTensor({3, 4, 5}, 1.0, rng));
  c.Put("param/b", NormalTensor({7}, 1.0, rng));
  const std::string path = (dir / "c.sftc").string();
  SaveCheckpoint(c, path);
  const Checkpoint back = LoadCheckpoint(path);
  EXPECT_EQ(back.config_hash, c.config_hash);
  EXPECT_EQ(back.config_text, c.config_text);
  EXPECT_EQ(back.step, 77);
  EXPECT_EQ(back.rng_state, c.rng_state);
  EXPECT_EQ(back.scalars, c.scalars);
  ASSERT_EQ(back.tensors.size(), 2u);
  for (size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.tensors[i].first, c.tensors[i].first);
    EXPECT_TRUE(back.tensors[i].second == c.tensors[i].second);
  }
  EXPECT_FALSE(fs::exists(path + ".tmp"));
}

TEST(Checkpoint, RejectsCorruptionVersionAndHash) {
  const fs::path dir = TempDir("corrupt");
  Checkpoint c;
  c.config_hash = 42;
  Rng rng(1);
  c.Put("param/a", NormalTensor({16}, 1.0, rng));
  const std::string path = (dir / "c.sftc").string();
  SaveCheckpoint(c, path);

  std::string bytes;
  {
    std::ifstream f(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }
  auto write = [&](const std::string& b) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(b.data(), static_cast<std::streamsize>(b.size()));
  };
  std::string flipped = bytes;
  flipped[flipped.size() - 20] ^= 0x01;  // inside the payload
  write(flipped);
  EXPECT_THROW(LoadCheckpoint(path), DataError);
  write(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(LoadCheckpoint(path), DataError);
  std::string version = bytes;
  version[4] = 2;
  write(version);
  EXPECT_THROW(LoadCheckpoint(path), DataError);
  write("nope");
  EXPECT_THROW(LoadCheckpoint(path), DataError);
  EXPECT_THROW(LoadCheckpoint((dir / "missing").string()), DataError);

  EXPECT_THROW(CheckConfigHash(c, 43, false), UsageError);
  EXPECT_NO_THROW(CheckConfigHash(c, 43, true));
  EXPECT_NO_THROW(CheckConfigHash(c, 42, false));
}

TEST(Checkpoint, ImportRequiresEveryParameter) {
  ParamStore store;
  store.Add("x", Tensor({2, 3}), kGroupAcoustic);
  Checkpoint c;
  EXPECT_THROW(ImportParams(c, store), DataError);
  c.Put("param/x", Tensor({3, 2}));
  EXPECT_THROW(ImportParams(c, store), DataError);
  c.tensors.clear();
  Tensor v({2, 3});
  v.Fill(7.0f);
  c.Put("param/x", v);
  c.Put("param/extra", Tensor({1}));
  ImportParams(c, store);
  EXPECT_TRUE(store.Get("x").value() == v);
}

TEST(Trainer, LossRecordHasEveryComponent) {
  Trainer t(SmallRun(), TinyCorpus());
  const LossRecord r = t.Step();
  EXPECT_EQ(r.step, 1);
  for (double v : {r.l1, r.ce_d, r.ce_p, r.ce_e, r.g_adv, r.d_loss, r.lr}) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
  }
  const std::string row = FormatLossRow(r);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 7);
}

TEST(Trainer, GradientIsolation) {
  Trainer t(SmallRun(), TinyCorpus());
  const TrainItem& item = t.items()[t.eligible()[0]];
  model::TrainConfig tc = SmallRun().train;
  Rng rng(3);
  const PromptPlan plan = *SamplePromptPlan(item.utt->frames(), tc, rng);
  ParamStore& store = t.model().params();

  // Discriminator loss on a detached fake touches no generator parameter.
  Trainer::ItemLoss L = t.Forward(item, plan, t.model().SampleNoise(rng));
  ParamStore dstore;
  Discriminator d(dstore, t.config().model, 1);
  store.ZeroGrad();
  Backward(LsganDiscriminatorLoss(d.Score(Constant(item.utt->mel), 0, 0),
                                  d.Score(Detach(L.pred), 0, 0)));
  for (const ParamEntry& e : store.entries()) ASSERT_FALSE(e.var.has_grad()) << e.name;
  // Only the scored window's stack is touched, and all of it is.
  for (const ParamEntry& e : dstore.entries()) {
    EXPECT_EQ(e.var.has_grad(), e.name.rfind("disc.w32.", 0) == 0) << e.name;
  }

  // Generator loss with the discriminator frozen leaves it without gradient.
  dstore.ZeroGrad();
  dstore.SetRequiresGrad(kGroupDiscriminator, false);
  Backward(Add(L.l1, LsganGeneratorLoss(d.Score(L.pred, 0, 0))));
  for (const ParamEntry& e : dstore.entries()) ASSERT_FALSE(e.var.has_grad()) << e.name;
  EXPECT_TRUE(store.Get("decoder.out.w").has_grad());
}

TEST(Trainer, NoAdversaryMeansReconPlusCeExactly) {
  model::RunConfig cfg = SmallRun();
  cfg.train.lambda_adv = 0.0;
  cfg.train.batch_size = 1;
  Trainer t(cfg, TinyCorpus());
  std::vector<Tensor> disc_before;
  for (const ParamEntry& e : t.model().params().entries()) {
    if (e.group == kGroupDiscriminator) disc_before.push_back(e.var.value());
  }
  for (int i = 0; i < 3; ++i) {
    const LossRecord r = t.Step();
    EXPECT_EQ(r.g_adv, 0.0);
    EXPECT_EQ(r.d_loss, 0.0);
    const float ce = (static_cast<float>(r.ce_d) + static_cast<float>(r.ce_p)) +
                     static_cast<float>(r.ce_e);
    EXPECT_EQ(static_cast<float>(r.total), static_cast<float>(r.l1) + ce);
  }
  size_t k = 0;
  for (const ParamEntry& e : t.model().params().entries()) {
    if (e.group == kGroupDiscriminator) {
      EXPECT_TRUE(e.var.value() == disc_before[k++]) << e.name;
    }
  }
}

TEST(Trainer, ShortUtterancesSkipDiscriminator) {
  model::RunConfig cfg = SmallRun();
  cfg.model.discriminator_windows = {4096};
  cfg.model.discriminator_count = 1;
  Trainer t(cfg, TinyCorpus());
  const LossRecord r = t.Step();
  EXPECT_EQ(r.d_loss, 0.0);
  EXPECT_EQ(r.g_adv, 0.0);
}

TEST(Trainer, ResumeReproducesNextStepBitwise) {
  const model::RunConfig cfg = SmallRun();
  Trainer a(cfg, TinyCorpus());
  a.Step();
  a.Step();
  const fs::path dir = TempDir("resume");
  const std::string path = (dir / "mid.sftc").string();
  SaveCheckpoint(a.Snapshot(), path);
  const LossRecord ra = a.Step();

  Trainer b(cfg, TinyCorpus());
  b.Restore(LoadCheckpoint(path), false);
  EXPECT_EQ(b.step(), 2);
  const LossRecord rb = b.Step();
  EXPECT_EQ(ra.l1, rb.l1);
  EXPECT_EQ(ra.ce_d, rb.ce_d);
  EXPECT_EQ(ra.g_adv, rb.g_adv);
  EXPECT_EQ(ra.d_loss, rb.d_loss);
  const Checkpoint ca = a.Snapshot(), cb = b.Snapshot();
  ASSERT_EQ(ca.tensors.size(), cb.tensors.size());
  for (size_t i = 0; i < ca.tensors.size(); ++i) {
    ASSERT_EQ(ca.tensors[i].first, cb.tensors[i].first);
    ASSERT_TRUE(ca.tensors[i].second == cb.tensors[i].second) << ca.tensors[i].first;
  }
  EXPECT_EQ(ca.rng_state, cb.rng_state);

  model::RunConfig other = cfg;
  other.train.lambda_adv = 0.5;
  Trainer c(other, TinyCorpus());
  EXPECT_THROW(c.Restore(LoadCheckpoint(path), false), UsageError);
}

TEST(Trainer, TrainLoopWritesLogAndResumesToSameCheckpoint) {
  model::RunConfig cfg = SmallRun();
  cfg.train.steps = 4;
  cfg.train.checkpoint_every = 2;
  const fs::path full = TempDir("loop_full"), part = TempDir("loop_part");
  TrainOptions o;
  o.out_dir = full.string();
  const TrainSummary s = Train(cfg, TinyCorpus(), o);
  EXPECT_EQ(s.steps, 4);
  EXPECT_TRUE(fs::exists(full / "checkpoint-2.sftc"));

  model::RunConfig half = cfg;
  half.train.steps = 2;
  o.out_dir = part.string();
  Train(half, TinyCorpus(), o);
  // Pick up from the mid-run checkpoint, as after an interruption.
  fs::copy_file(full / "checkpoint-2.sftc", part / "checkpoint.sftc",
                fs::copy_options::overwrite_existing);
  o.resume = true;
  EXPECT_EQ(Train(cfg, TinyCorpus(), o).ran, 2);

  const Checkpoint a = LoadCheckpoint((full / "checkpoint.sftc").string());
  const Checkpoint b = LoadCheckpoint((part / "checkpoint.sftc").string());
  ASSERT_EQ(a.tensors.size(), b.tensors.size());
  for (size_t i = 0; i < a.tensors.size(); ++i) {
    ASSERT_TRUE(a.tensors[i].second == b.tensors[i].second) << a.tensors[i].first;
  }
  std::ifstream la(full / "loss.csv"), lb(part / "loss.csv");
  const std::string ta((std::istreambuf_iterator<char>(la)), std::istreambuf_iterator<char>());
  const std::string tb((std::istreambuf_iterator<char>(lb)), std::istreambuf_iterator<char>());
  EXPECT_EQ(ta, tb);
  EXPECT_EQ(std::count(ta.begin(), ta.end(), '\n'), 5);

  // Already finished: returns without running.
  EXPECT_EQ(Train(cfg, TinyCorpus(), o).ran, 0);
}

TEST(Trainer, EvaluateIsDeterministic) {
  Trainer t(SmallRun(), TinyCorpus());
  std::vector<const corpus::Utterance*> us;
  for (const auto& u : TinyCorpus().utterances) us.push_back(&u);
  const EvalResult a = t.Evaluate(us), b = t.Evaluate(us);
  EXPECT_EQ(a.l1, b.l1);
  EXPECT_EQ(a.accuracy.pitch, b.accuracy.pitch);
  EXPECT_EQ(a.utterances, static_cast<int64_t>(us.size()));
  EXPECT_GE(a.accuracy.min(), 0.0);
  EXPECT_LE(a.accuracy.min(), 1.0);
}

}  // namespace
}  // namespace sftts::training
