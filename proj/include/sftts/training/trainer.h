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

// Joint training of the acoustic model, the prosody language model and the
// multi-window discriminator. Single writer, single thread: with the same
// corpus, config and checkpoint every step is bitwise reproducible.

#ifndef SFTTS_TRAINING_TRAINER_H_
#define SFTTS_TRAINING_TRAINER_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sftts/corpus/corpus.h"
#include "sftts/model/config.h"
#include "sftts/model/model.h"
#include "sftts/model/prosody_lm.h"
#include "sftts/training/checkpoint.h"
#include "sftts/training/discriminator.h"
#include "sftts/training/objectives.h"
#include "sftts/training/optim.h"

namespace sftts::training {

struct LossRecord {
  int64_t step = 0;
  double l1 = 0.0;
  double ce_d = 0.0, ce_p = 0.0, ce_e = 0.0;
  double g_adv = 0.0;   // 0 while adversarial training is off
  double d_loss = 0.0;  // likewise
  double lr = 0.0;      // acoustic group
  // Total generator objective as optimised (batch mean).
  double total = 0.0;
};

inline constexpr char kLossCsvHeader[] = "step,l1,ce_d,ce_p,ce_e,g_adv,d_loss,lr";
std::string FormatLossRow(const LossRecord& r);

struct EvalResult {
  double l1 = 0.0;  // mean masked L1, teacher-forced units
  model::UnitAccuracy accuracy;  // greedy decode vs ground truth, pooled
  int64_t utterances = 0;
};

// Everything a train step needs from one utterance, fixed at startup.
struct TrainItem {
  const corpus::Utterance* utt = nullptr;
  dsp::UnitSequence units;
};

class Trainer {
 public:
  Trainer(const model::RunConfig& cfg, const corpus::Corpus& corpus);

  // One optimisation step over a freshly drawn batch.
  LossRecord Step();
  // Deterministic: the prompt plan and noise of each utterance depend only
  // on the run seed and the utterance id.
  EvalResult Evaluate(const std::vector<const corpus::Utterance*>& utts) const;

  Checkpoint Snapshot() const;
  // Restores parameters, moments, rng and step. Rejects a checkpoint from a
  // different configuration unless `force`.
  void Restore(const Checkpoint& ckpt, bool force);

  int64_t step() const { return step_; }
  // Set once the early-stopping targets held; running to train.steps does
  // not set it, so a completed run can be extended with a larger step count.
  bool finished() const { return finished_; }
  void set_finished(bool f) { finished_ = f; }
  const model::RunConfig& config() const { return cfg_; }
  model::Model& model() { return *model_; }
  const model::Model& model() const { return *model_; }
  const std::vector<TrainItem>& items() const { return items_; }
  // Utterances long enough to train on (train split).
  const std::vector<size_t>& eligible() const { return eligible_; }

  // Generator-side objective for one item, without any update. Exposed for
  // tests of the loss contracts.
  struct ItemLoss {
    Var l1;
    model::ProsodyLoss ce;
    Var pred;  // decoded mel (T x 80)
  };
  ItemLoss Forward(const TrainItem& item, const PromptPlan& plan, const Tensor& noise) const;

 private:
  model::RunConfig cfg_;
  const corpus::Corpus* corpus_;
  std::unique_ptr<model::Model> model_;
  Discriminator disc_;
  AdamW adam_;
  Rng rng_;
  int64_t step_ = 0;
  bool finished_ = false;
  std::vector<TrainItem> items_;
  std::vector<size_t> eligible_;
};

struct TrainOptions {
  std::string out_dir;  // loss.csv and checkpoints go here
  bool resume = false;
  bool force = false;   // accept a checkpoint with a different config hash
  std::function<void(const LossRecord&)> on_step;
  std::function<void(int64_t, const EvalResult&)> on_eval;
};

struct TrainSummary {
  int64_t steps = 0;     // steps completed in total
  int64_t ran = 0;       // steps run by this call
  bool early_stopped = false;
  EvalResult last_eval;
  bool evaluated = false;
  std::string checkpoint;  // path of the final checkpoint
};

// Runs to cfg.train.steps or until the early-stopping targets hold, writing
// <out>/loss.csv, <out>/checkpoint.sftc and, every checkpoint_every steps,
// <out>/checkpoint-<step>.sftc. A resumed run that already reached its step
// count or its targets returns immediately.
TrainSummary Train(const model::RunConfig& cfg, const corpus::Corpus& corpus,
                   const TrainOptions& opts);

}  // namespace sftts::training

#endif  // SFTTS_TRAINING_TRAINER_H_
