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

// Run configuration: every model hyperparameter, the training recipe, data
// location, seed and ablation switches. Serialised as a flat "key = value"
// document with dotted sections; unknown keys are errors.

#ifndef SFTTS_MODEL_CONFIG_H_
#define SFTTS_MODEL_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

namespace sftts::model {

// One transformer stack.
struct StackConfig {
  int layers = 3;
  int ff_dim = 512;
  int hidden_dim = 128;
  int kernel_size = 3;  // FFN convolution width (1 = position-wise)
  int heads = 4;
};

struct ModelConfig {
  int num_phonemes = 22;

  StackConfig text_encoder{6, 512, 128, 3, 4};
  StackConfig prompt_encoder{3, 512, 128, 9, 4};
  StackConfig prosody{3, 512, 128, 1, 4};
  StackConfig generator{3, 512, 128, 3, 4};  // filter and source alike
  StackConfig decoder{3, 512, 128, 3, 4};

  int duration_codebook = 32;
  int duration_dim = 128;
  int pitch_codebook = 64;
  int pitch_dim = 128;
  int energy_codebook = 64;
  int energy_dim = 128;
  int max_steps = 256;  // learned step-position table of the prosody model

  int film_heads = 4;
  double upsample_sigma = 1.0;

  int mapping_depth = 4;
  int mapped_style_dim = 64;
  int noise_dim = 16;
  int global_style_dim = 128;
  int kernel_bank = 4;
  int style_channels = 128;  // global style embedder convolutions
  int style_kernel = 5;

  int discriminator_count = 3;
  std::vector<int> discriminator_windows = {32, 64, 128};
  int discriminator_kernel = 3;
  int discriminator_hidden = 32;

  bool no_source_filter = false;
  bool no_adaptive_kernels = false;
  bool no_film = false;

  // Width shared by every stack; Validate() insists they agree.
  int hidden() const { return text_encoder.hidden_dim; }
  void Validate() const;
};

struct TrainConfig {
  int64_t steps = 20000;
  int batch_size = 4;
  int warmup = 4000;
  double lr_scale = 0.0632;  // peak lr = scale / sqrt(warmup) = 1e-3
  double beta1 = 0.8;
  double beta2 = 0.99;
  double adam_eps = 1e-9;
  double weight_decay = 0.01;
  double grad_clip = 1.0;
  double lambda_adv = 1.0;
  int64_t adv_start = 10000;  // adversarial loss and discriminator start here
  int min_frames = 16;
  double prompt_min_fraction = 0.25;
  double prompt_max_fraction = 0.5;
  int prompt_min_frames = 8;
  int prompt_max_frames = 256;
  int64_t log_every = 1;
  int64_t checkpoint_every = 1000;
  // Stop early once a held-in evaluation reaches both targets (0 disables).
  int64_t eval_every = 0;
  double target_l1 = 0.0;
  double target_unit_accuracy = 0.0;
};

struct RunConfig {
  uint64_t seed = 1;
  std::string corpus;  // empty: the CLI falls back to SFTTS_CORPUS_ROOT
  ModelConfig model;
  TrainConfig train;

  // Canonical text (every key, fixed order).
  std::string Format() const;
  // Missing keys keep their defaults; unknown or malformed keys throw UsageError.
  static RunConfig Parse(const std::string& text);
  static RunConfig Load(const std::string& path);
  void Save(const std::string& path) const;
  // Sets one key from its textual value.
  void Set(const std::string& key, const std::string& value);
  // FNV-1a over everything that shapes parameters or the training trajectory;
  // excludes run length, logging cadence and the corpus path.
  uint64_t Hash() const;
  void Validate() const;
};

// Paper-scale hyperparameters (hidden 512, ff 2048, 8 heads, ...).
ModelConfig PaperScaleModel();

std::string HexHash(uint64_t h);

}  // namespace sftts::model

#endif  // SFTTS_MODEL_CONFIG_H_
