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

#include "sftts/training/trainer.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sftts/common/error.h"

namespace sftts::training {
namespace {

namespace fs = std::filesystem;

constexpr uint64_t kTrainStream = 10;
constexpr uint64_t kEvalStream = 11;

Tensor Rows(const Tensor& m, int64_t start, int64_t len) {
  Tensor out({len, m.dim(1)});
  std::memcpy(out.data(), m.data() + start * m.dim(1), sizeof(float) * len * m.dim(1));
  return out;
}

double Scalar(const Var& v) { return static_cast<double>(v.value()[0]); }

std::vector<const corpus::Utterance*> EvalSet(const corpus::Corpus& c, const Trainer& t) {
  auto val = c.InSplit(corpus::Split::kVal);
  if (!val.empty()) return val;
  std::vector<const corpus::Utterance*> out;
  for (size_t i : t.eligible()) out.push_back(t.items()[i].utt);
  return out;
}

bool TargetsMet(const model::TrainConfig& t, const EvalResult& e) {
  if (t.target_l1 <= 0.0 && t.target_unit_accuracy <= 0.0) return false;
  if (t.target_l1 > 0.0 && !(e.l1 < t.target_l1)) return false;
  if (t.target_unit_accuracy > 0.0 && !(e.accuracy.min() > t.target_unit_accuracy)) return false;
  return true;
}

// Keeps the header and rows up to `step`, so a resumed run appends cleanly.
void TrimLossLog(const std::string& path, int64_t step) {
  std::ifstream in(path);
  if (!in) return;
  std::vector<std::string> keep;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("step,", 0) == 0) {
      keep.push_back(line);
      continue;
    }
    if (std::stoll(line.substr(0, line.find(','))) <= step) keep.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
}

}  // namespace

std::string FormatLossRow(const LossRecord& r) {
  std::ostringstream s;
  s.precision(9);
  s << r.step << ',' << r.l1 << ',' << r.ce_d << ',' << r.ce_p << ',' << r.ce_e << ','
    << r.g_adv << ',' << r.d_loss << ',' << r.lr;
  return s.str();
}

Trainer::Trainer(const model::RunConfig& cfg, const corpus::Corpus& corpus)
    : cfg_(cfg),
      corpus_(&corpus),
      adam_(AdamWOptions{cfg.train.beta1, cfg.train.beta2, cfg.train.adam_eps,
                         cfg.train.weight_decay}),
      rng_(Rng::Derive(cfg.seed, kTrainStream)) {
  cfg_.Validate();
  if (corpus.num_phonemes() > cfg_.model.num_phonemes) {
    throw UsageError("corpus has " + std::to_string(corpus.num_phonemes()) +
                     " phonemes but model.num_phonemes is " +
                     std::to_string(cfg_.model.num_phonemes));
  }
  model_ = std::make_unique<model::Model>(cfg_.model, cfg_.seed);
  disc_ = Discriminator(model_->params(), cfg_.model, cfg_.seed);
  for (const corpus::Utterance& u : corpus.utterances) {
    if (u.split != corpus::Split::kTrain) continue;
    TrainItem item{&u, corpus::UnitsFor(corpus, u)};
    if (u.frames() >= cfg_.train.min_frames) eligible_.push_back(items_.size());
    items_.push_back(std::move(item));
  }
  if (eligible_.empty()) {
    throw DataError("no training utterance has at least " +
                    std::to_string(cfg_.train.min_frames) + " frames");
  }
}

Trainer::ItemLoss Trainer::Forward(const TrainItem& item, const PromptPlan& plan,
                                   const Tensor& noise) const {
  const corpus::Utterance& u = *item.utt;
  const model::Model& m = *model_;
  const Tensor segment = Rows(u.mel, plan.start, plan.length);
  const Var seg = Constant(segment);
  const Var x = m.EncodeText(u.phonemes);
  const Var r_s = m.EncodePrompt(seg);
  const Var r_p = m.EncodePrompt(Constant(Rows(u.mel, plan.start, plan.prosody_length)));
  const Var r_g = m.GlobalStyle(seg);

  ItemLoss out;
  out.ce = model::ProsodyCrossEntropy(m.lm().TeacherForced(x, r_p, item.units), item.units);
  const model::Representations reps = m.Generate(x, item.units, u.durations, r_s);
  out.pred = m.Decode(reps.coarse, r_g, Constant(noise));
  out.l1 = MaskedL1(out.pred, u.mel, plan.mask);
  return out;
}

LossRecord Trainer::Step() {
  const int64_t s = step_ + 1;
  const model::TrainConfig& tc = cfg_.train;
  ParamStore& store = model_->params();
  store.ZeroGrad();

  const int64_t batch = tc.batch_size;
  std::vector<size_t> picks;
  for (int64_t i = 0; i < batch; ++i) {
    picks.push_back(eligible_[rng_.UniformInt(0, static_cast<int64_t>(eligible_.size()) - 1)]);
  }
  auto batch_ids = [&] {
    std::string ids;
    for (size_t p : picks) ids += (ids.empty() ? "" : ",") + items_[p].utt->id;
    return ids;
  };

  const bool adversarial = tc.lambda_adv > 0.0 && s > tc.adv_start;
  std::vector<ItemLoss> losses;
  std::vector<std::vector<int64_t>> crops;
  for (size_t p : picks) {
    const TrainItem& item = items_[p];
    const int64_t frames = item.utt->frames();
    // Eligibility guarantees a plan.
    const PromptPlan plan = *SamplePromptPlan(frames, tc, rng_);
    const Tensor noise = model_->SampleNoise(rng_);
    losses.push_back(Forward(item, plan, noise));
    std::vector<int64_t> starts;
    if (adversarial) {
      for (int w : disc_.windows()) starts.push_back(CropStart(frames, w, rng_));
    }
    crops.push_back(std::move(starts));
  }

  LossRecord rec;
  rec.step = s;
  const float inv_b = 1.0f / static_cast<float>(batch);

  // Discriminator update on (real, detached fake), same crops as below.
  if (adversarial) {
    Var d_total;
    for (size_t i = 0; i < picks.size(); ++i) {
      const Var real_mel = Constant(items_[picks[i]].utt->mel);
      const Var fake_mel = Detach(losses[i].pred);
      Var d_item;
      int active = 0;
      for (size_t w = 0; w < crops[i].size(); ++w) {
        if (crops[i][w] < 0) continue;
        Var l = LsganDiscriminatorLoss(disc_.Score(real_mel, w, crops[i][w]),
                                       disc_.Score(fake_mel, w, crops[i][w]));
        d_item = d_item.defined() ? Add(d_item, l) : l;
        ++active;
      }
      if (active == 0) continue;
      d_item = MulScalar(d_item, inv_b / static_cast<float>(active));
      d_total = d_total.defined() ? Add(d_total, d_item) : d_item;
    }
    if (d_total.defined()) {
      rec.d_loss = Scalar(d_total);
      if (!std::isfinite(rec.d_loss)) {
        throw NumericError("step " + std::to_string(s) + ": discriminator loss is not finite (batch " +
                           batch_ids() + ")");
      }
      Backward(d_total);
      ClipGradNorm(store, {kGroupDiscriminator}, tc.grad_clip);
      adam_.Step(store, kGroupDiscriminator, NoamLr(s, tc.warmup, tc.lr_scale));
      store.ZeroGrad(kGroupDiscriminator);
    }
  }

  // Generator objective: L1 + CE + lambda * L_G with the discriminator frozen.
  Var total;
  double l1 = 0, ce_d = 0, ce_p = 0, ce_e = 0, g_adv = 0;
  store.SetRequiresGrad(kGroupDiscriminator, false);
  for (size_t i = 0; i < picks.size(); ++i) {
    ItemLoss& L = losses[i];
    Var item = Add(L.l1, L.ce.total);
    if (adversarial) {
      Var g;
      int active = 0;
      for (size_t w = 0; w < crops[i].size(); ++w) {
        if (crops[i][w] < 0) continue;
        Var l = LsganGeneratorLoss(disc_.Score(L.pred, w, crops[i][w]));
        g = g.defined() ? Add(g, l) : l;
        ++active;
      }
      if (active > 0) {
        g = MulScalar(g, 1.0f / static_cast<float>(active));
        g_adv += Scalar(g);
        item = Add(item, MulScalar(g, static_cast<float>(tc.lambda_adv)));
      }
    }
    item = MulScalar(item, inv_b);
    total = total.defined() ? Add(total, item) : item;
    l1 += Scalar(L.l1);
    ce_d += Scalar(L.ce.duration);
    ce_p += Scalar(L.ce.pitch);
    ce_e += Scalar(L.ce.energy);
  }
  store.SetRequiresGrad(kGroupDiscriminator, true);
  rec.l1 = l1 / batch;
  rec.ce_d = ce_d / batch;
  rec.ce_p = ce_p / batch;
  rec.ce_e = ce_e / batch;
  rec.g_adv = g_adv / batch;
  rec.total = Scalar(total);
  if (!std::isfinite(rec.total)) {
    throw NumericError("step " + std::to_string(s) + ": generator loss is not finite (batch " +
                       batch_ids() + ", l1 " + std::to_string(rec.l1) + ", ce " +
                       std::to_string(rec.ce_d + rec.ce_p + rec.ce_e) + ")");
  }

  Backward(total);
  try {
    ClipGradNorm(store, {kGroupAcoustic, kGroupProsody}, tc.grad_clip);
  } catch (const NumericError& e) {
    throw NumericError("step " + std::to_string(s) + ": " + e.what() + " (batch " + batch_ids() +
                       ")");
  }
  rec.lr = NoamLr(s, tc.warmup, tc.lr_scale);
  adam_.Step(store, kGroupAcoustic, rec.lr);
  adam_.Step(store, kGroupProsody, ProsodyLr(s, tc.warmup, tc.lr_scale));
  store.ZeroGrad();
  step_ = s;
  return rec;
}

EvalResult Trainer::Evaluate(const std::vector<const corpus::Utterance*>& utts) const {
  NoGradGuard guard;
  EvalResult out;
  double l1 = 0.0;
  int64_t steps = 0;
  double hit_d = 0.0, hit_p = 0.0, hit_e = 0.0;
  for (const corpus::Utterance* u : utts) {
    if (u->frames() < cfg_.train.min_frames) continue;
    Rng rng(Rng::Derive(cfg_.seed ^ corpus::Fnv1a(u->id), kEvalStream));
    const PromptPlan plan = *SamplePromptPlan(u->frames(), cfg_.train, rng);
    const Tensor noise = model_->SampleNoise(rng);
    const TrainItem item{u, corpus::UnitsFor(*corpus_, *u)};
    l1 += Scalar(Forward(item, plan, noise).l1);

    const model::Model& m = *model_;
    const Var x = m.EncodeText(u->phonemes);
    const Var r_p = m.EncodePrompt(Constant(Rows(u->mel, plan.start, plan.prosody_length)));
    model::Sampling greedy;
    greedy.greedy = true;
    const dsp::UnitSequence got =
        m.lm().Decode(x, r_p, static_cast<int64_t>(u->phonemes.size()), greedy, rng);
    const model::UnitAccuracy acc = model::CompareUnits(got, item.units);
    const double n = static_cast<double>(u->phonemes.size());
    hit_d += acc.duration * n;
    hit_p += acc.pitch * n;
    hit_e += acc.energy * n;
    steps += static_cast<int64_t>(u->phonemes.size());
    ++out.utterances;
  }
  if (out.utterances == 0) throw DataError("evaluation: no utterance is long enough");
  out.l1 = l1 / static_cast<double>(out.utterances);
  out.accuracy.duration = hit_d / static_cast<double>(steps);
  out.accuracy.pitch = hit_p / static_cast<double>(steps);
  out.accuracy.energy = hit_e / static_cast<double>(steps);
  return out;
}

Checkpoint Trainer::Snapshot() const {
  Checkpoint c;
  c.config_hash = cfg_.Hash();
  c.config_text = cfg_.Format();
  c.step = step_;
  c.rng_state = rng_.SaveState();
  for (const auto& [group, n] : adam_.steps()) c.scalars["adam.step/" + group] = n;
  c.scalars["finished"] = finished_ ? 1 : 0;
  ExportParams(model_->params(), &c);
  for (const auto& [name, mo] : adam_.moments()) {
    c.Put("adam.m/" + name, mo.m);
    c.Put("adam.v/" + name, mo.v);
  }
  return c;
}

void Trainer::Restore(const Checkpoint& c, bool force) {
  CheckConfigHash(c, cfg_.Hash(), force);
  ImportParams(c, model_->params());
  adam_.moments().clear();
  adam_.steps().clear();
  for (const auto& [name, t] : c.tensors) {
    if (name.rfind("adam.m/", 0) == 0) {
      const std::string p = name.substr(7);
      const Tensor* v = c.Find("adam.v/" + p);
      if (v == nullptr) throw DataError("checkpoint: moment " + p + " has no second moment");
      adam_.moments()[p] = AdamW::Moments{t, *v};
    }
  }
  for (const auto& [key, n] : c.scalars) {
    if (key.rfind("adam.step/", 0) == 0) adam_.steps()[key.substr(10)] = n;
  }
  auto f = c.scalars.find("finished");
  finished_ = f != c.scalars.end() && f->second != 0;
  rng_.LoadState(c.rng_state);
  step_ = c.step;
}

TrainSummary Train(const model::RunConfig& cfg, const corpus::Corpus& corpus,
                   const TrainOptions& opts) {
  if (opts.out_dir.empty()) throw UsageError("train: output directory required");
  fs::create_directories(opts.out_dir);
  const std::string latest = (fs::path(opts.out_dir) / "checkpoint.sftc").string();
  const std::string log_path = (fs::path(opts.out_dir) / "loss.csv").string();

  Trainer trainer(cfg, corpus);
  TrainSummary sum;
  if (opts.resume) {
    if (!fs::exists(latest)) throw UsageError("train --resume: no checkpoint at " + latest);
    trainer.Restore(LoadCheckpoint(latest), opts.force);
    TrimLossLog(log_path, trainer.step());
  } else {
    std::ofstream(log_path, std::ios::trunc) << kLossCsvHeader << '\n';
  }
  sum.checkpoint = latest;
  if (trainer.finished() || trainer.step() >= cfg.train.steps) {
    sum.steps = trainer.step();
    return sum;
  }

  std::ofstream log(log_path, std::ios::app);
  const auto eval_set = EvalSet(corpus, trainer);
  auto save = [&](const std::string& path) { SaveCheckpoint(trainer.Snapshot(), path); };
  while (trainer.step() < cfg.train.steps) {
    const LossRecord rec = trainer.Step();
    ++sum.ran;
    if (cfg.train.log_every > 0 && rec.step % cfg.train.log_every == 0) {
      log << FormatLossRow(rec) << '\n';
      log.flush();
    }
    if (opts.on_step) opts.on_step(rec);
    if (cfg.train.eval_every > 0 && rec.step % cfg.train.eval_every == 0) {
      sum.last_eval = trainer.Evaluate(eval_set);
      sum.evaluated = true;
      if (opts.on_eval) opts.on_eval(rec.step, sum.last_eval);
      if (TargetsMet(cfg.train, sum.last_eval)) {
        sum.early_stopped = true;
        break;
      }
    }
    if (cfg.train.checkpoint_every > 0 && rec.step % cfg.train.checkpoint_every == 0) {
      save(latest);
      save((fs::path(opts.out_dir) / ("checkpoint-" + std::to_string(rec.step) + ".sftc")).string());
    }
  }
  trainer.set_finished(sum.early_stopped);
  save(latest);
  sum.steps = trainer.step();
  return sum;
}

}  // namespace sftts::training
