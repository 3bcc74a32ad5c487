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

#include "sftts/model/config.h"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "sftts/common/error.h"
#include "sftts/corpus/corpus.h"

namespace sftts::model {
namespace {

struct Field {
  std::string key;
  bool hashed;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw UsageError("config: bad value '" + v + "' for " + key);
  }
  return out;
}

bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw UsageError("config: bad boolean '" + v + "' for " + key);
}

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// `ref` maps a config onto the field it owns.
template <typename T, typename Get>
Field Make(const std::string& key, bool hashed, Get ref) {
  Field f;
  f.key = key;
  f.hashed = hashed;
  f.get = [ref](const RunConfig& c) {
    const T& v = ref(const_cast<RunConfig&>(c));
    if constexpr (std::is_same_v<T, bool>) {
      return std::string(v ? "true" : "false");
    } else if constexpr (std::is_same_v<T, double>) {
      return FormatDouble(v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else {
      return std::to_string(v);
    }
  };
  f.set = [ref, key](RunConfig& c, const std::string& s) {
    T& v = ref(c);
    if constexpr (std::is_same_v<T, bool>) {
      v = ParseBool(key, s);
    } else if constexpr (std::is_same_v<T, double>) {
      v = ParseNumber<double>(key, s);
    } else if constexpr (std::is_same_v<T, std::string>) {
      v = s;
    } else {
      v = ParseNumber<T>(key, s);
    }
  };
  return f;
}

void AddStack(std::vector<Field>& fs, const std::string& prefix,
              StackConfig ModelConfig::*member, bool with_kernel) {
  fs.push_back(Make<int>(prefix + ".layers", true,
                         [member](RunConfig& c) -> int& { return (c.model.*member).layers; }));
  fs.push_back(Make<int>(prefix + ".ff_dim", true,
                         [member](RunConfig& c) -> int& { return (c.model.*member).ff_dim; }));
  fs.push_back(Make<int>(prefix + ".hidden_dim", true, [member](RunConfig& c) -> int& {
    return (c.model.*member).hidden_dim;
  }));
  if (with_kernel) {
    fs.push_back(Make<int>(prefix + ".kernel_size", true, [member](RunConfig& c) -> int& {
      return (c.model.*member).kernel_size;
    }));
  }
  fs.push_back(Make<int>(prefix + ".heads", true,
                         [member](RunConfig& c) -> int& { return (c.model.*member).heads; }));
}

#define SFTTS_FIELD(T, key, hashed, expr) \
  fs.push_back(Make<T>(key, hashed, [](RunConfig& c) -> T& { return expr; }))

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> fs;
    SFTTS_FIELD(uint64_t, "seed", true, c.seed);
    SFTTS_FIELD(std::string, "data.corpus", false, c.corpus);
    SFTTS_FIELD(int, "model.num_phonemes", true, c.model.num_phonemes);
    AddStack(fs, "text_encoder", &ModelConfig::text_encoder, true);
    AddStack(fs, "prompt_encoder", &ModelConfig::prompt_encoder, true);
    AddStack(fs, "prosody", &ModelConfig::prosody, false);
    SFTTS_FIELD(int, "prosody.duration_codebook", true, c.model.duration_codebook);
    SFTTS_FIELD(int, "prosody.duration_dim", true, c.model.duration_dim);
    SFTTS_FIELD(int, "prosody.pitch_codebook", true, c.model.pitch_codebook);
    SFTTS_FIELD(int, "prosody.pitch_dim", true, c.model.pitch_dim);
    SFTTS_FIELD(int, "prosody.energy_codebook", true, c.model.energy_codebook);
    SFTTS_FIELD(int, "prosody.energy_dim", true, c.model.energy_dim);
    SFTTS_FIELD(int, "prosody.max_steps", true, c.model.max_steps);
    AddStack(fs, "generator", &ModelConfig::generator, true);
    SFTTS_FIELD(int, "generator.film_heads", true, c.model.film_heads);
    SFTTS_FIELD(double, "generator.upsample_sigma", true, c.model.upsample_sigma);
    AddStack(fs, "decoder", &ModelConfig::decoder, true);
    SFTTS_FIELD(int, "adaptive.mapping_depth", true, c.model.mapping_depth);
    SFTTS_FIELD(int, "adaptive.mapped_style_dim", true, c.model.mapped_style_dim);
    SFTTS_FIELD(int, "adaptive.noise_dim", true, c.model.noise_dim);
    SFTTS_FIELD(int, "adaptive.global_style_dim", true, c.model.global_style_dim);
    SFTTS_FIELD(int, "adaptive.kernel_bank", true, c.model.kernel_bank);
    SFTTS_FIELD(int, "style_embedder.channels", true, c.model.style_channels);
    SFTTS_FIELD(int, "style_embedder.kernel_size", true, c.model.style_kernel);
    SFTTS_FIELD(int, "discriminator.count", true, c.model.discriminator_count);
    fs.push_back(Field{
        "discriminator.windows", true,
        [](const RunConfig& c) {
          std::string s;
          for (size_t i = 0; i < c.model.discriminator_windows.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(c.model.discriminator_windows[i]);
          }
          return s;
        },
        [](RunConfig& c, const std::string& v) {
          std::vector<int> w;
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) {
            w.push_back(ParseNumber<int>("discriminator.windows", Trim(item)));
          }
          c.model.discriminator_windows = w;
        }});
    SFTTS_FIELD(int, "discriminator.kernel_size", true, c.model.discriminator_kernel);
    SFTTS_FIELD(int, "discriminator.hidden_dim", true, c.model.discriminator_hidden);
    SFTTS_FIELD(bool, "ablation.no_source_filter", true, c.model.no_source_filter);
    SFTTS_FIELD(bool, "ablation.no_adaptive_kernels", true, c.model.no_adaptive_kernels);
    SFTTS_FIELD(bool, "ablation.no_film", true, c.model.no_film);
    SFTTS_FIELD(int64_t, "train.steps", false, c.train.steps);
    SFTTS_FIELD(int, "train.batch_size", true, c.train.batch_size);
    SFTTS_FIELD(int, "train.warmup", true, c.train.warmup);
    SFTTS_FIELD(double, "train.lr_scale", true, c.train.lr_scale);
    SFTTS_FIELD(double, "train.beta1", true, c.train.beta1);
    SFTTS_FIELD(double, "train.beta2", true, c.train.beta2);
    SFTTS_FIELD(double, "train.adam_eps", true, c.train.adam_eps);
    SFTTS_FIELD(double, "train.weight_decay", true, c.train.weight_decay);
    SFTTS_FIELD(double, "train.grad_clip", true, c.train.grad_clip);
    SFTTS_FIELD(double, "train.lambda_adv", true, c.train.lambda_adv);
    SFTTS_FIELD(int64_t, "train.adv_start", true, c.train.adv_start);
    SFTTS_FIELD(int, "train.min_frames", true, c.train.min_frames);
    SFTTS_FIELD(double, "train.prompt_min_fraction", true, c.train.prompt_min_fraction);
    SFTTS_FIELD(double, "train.prompt_max_fraction", true, c.train.prompt_max_fraction);
    SFTTS_FIELD(int, "train.prompt_min_frames", true, c.train.prompt_min_frames);
    SFTTS_FIELD(int, "train.prompt_max_frames", true, c.train.prompt_max_frames);
    SFTTS_FIELD(int64_t, "train.log_every", false, c.train.log_every);
    SFTTS_FIELD(int64_t, "train.checkpoint_every", false, c.train.checkpoint_every);
    SFTTS_FIELD(int64_t, "train.eval_every", false, c.train.eval_every);
    SFTTS_FIELD(double, "train.target_l1", false, c.train.target_l1);
    SFTTS_FIELD(double, "train.target_unit_accuracy", false, c.train.target_unit_accuracy);
    return fs;
  }();
  return fields;
}

#undef SFTTS_FIELD

const Field& FindField(const std::string& key) {
  for (const Field& f : Fields()) {
    if (f.key == key) return f;
  }
  throw UsageError("config: unknown key '" + key + "'");
}

void CheckStack(const std::string& name, const StackConfig& s, int hidden) {
  if (s.layers < 1 || s.ff_dim < 1 || s.heads < 1) {
    throw UsageError("config: " + name + " needs positive layers, ff_dim and heads");
  }
  if (s.hidden_dim != hidden) {
    throw UsageError("config: " + name + ".hidden_dim " + std::to_string(s.hidden_dim) +
                     " differs from the shared width " + std::to_string(hidden));
  }
  if (hidden % s.heads != 0) throw UsageError("config: " + name + ".heads must divide hidden_dim");
  if (s.kernel_size < 1 || s.kernel_size % 2 == 0) {
    throw UsageError("config: " + name + ".kernel_size must be odd");
  }
}

}  // namespace

void ModelConfig::Validate() const {
  const int h = hidden();
  if (h < 2 || h % 2 != 0) throw UsageError("config: hidden width must be even and >= 2");
  if (num_phonemes < 1) throw UsageError("config: model.num_phonemes must be positive");
  CheckStack("text_encoder", text_encoder, h);
  CheckStack("prompt_encoder", prompt_encoder, h);
  CheckStack("prosody", prosody, h);
  if (prosody.kernel_size != 1) throw UsageError("config: prosody stack is position-wise");
  CheckStack("generator", generator, h);
  CheckStack("decoder", decoder, h);
  if (duration_dim != h || pitch_dim != h || energy_dim != h) {
    throw UsageError("config: unit embedding dims must equal the hidden width (tables are shared)");
  }
  if (duration_codebook < 2 || pitch_codebook < 2 || energy_codebook < 2) {
    throw UsageError("config: codebooks need at least two entries");
  }
  if (max_steps < 1) throw UsageError("config: prosody.max_steps must be positive");
  if (film_heads < 1 || h % film_heads != 0) throw UsageError("config: film_heads must divide hidden");
  if (!(upsample_sigma > 0.0)) throw UsageError("config: upsample_sigma must be positive");
  if (mapping_depth < 1 || mapped_style_dim < 1 || noise_dim < 0 || global_style_dim < 1 ||
      kernel_bank < 1 || style_channels < 1) {
    throw UsageError("config: adaptive-kernel dimensions must be positive");
  }
  if (style_kernel < 1 || style_kernel % 2 == 0) {
    throw UsageError("config: style_embedder.kernel_size must be odd");
  }
  if (discriminator_count != static_cast<int>(discriminator_windows.size())) {
    throw UsageError("config: discriminator.count does not match the number of windows");
  }
  for (int w : discriminator_windows) {
    if (w < 4) throw UsageError("config: discriminator windows must be >= 4 frames");
  }
  if (discriminator_kernel < 1 || discriminator_kernel % 2 == 0 || discriminator_hidden < 1) {
    throw UsageError("config: discriminator kernel must be odd and hidden positive");
  }
}

std::string RunConfig::Format() const {
  std::string out = "# sftts run configuration\n";
  for (const Field& f : Fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

void RunConfig::Set(const std::string& key, const std::string& value) {
  FindField(key).set(*this, value);
}

RunConfig RunConfig::Parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = Trim(line.substr(0, eq));
    if (!seen.insert(key).second) throw UsageError("config: duplicate key '" + key + "'");
    c.Set(key, Trim(line.substr(eq + 1)));
  }
  c.Validate();
  return c;
}

RunConfig RunConfig::Load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return Parse(ss.str());
}

void RunConfig::Save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw DataError("config: cannot write " + path);
  f << Format();
}

uint64_t RunConfig::Hash() const {
  std::string text;
  for (const Field& f : Fields()) {
    if (f.hashed) text += f.key + "=" + f.get(*this) + "\n";
  }
  return corpus::Fnv1a(text);
}

void RunConfig::Validate() const {
  model.Validate();
  const TrainConfig& t = train;
  if (t.steps < 0 || t.batch_size < 1 || t.warmup < 1) {
    throw UsageError("config: train.steps, batch_size and warmup must be positive");
  }
  if (!(t.lr_scale > 0.0) || !(t.beta1 >= 0.0 && t.beta1 < 1.0) ||
      !(t.beta2 >= 0.0 && t.beta2 < 1.0) || !(t.adam_eps > 0.0) || t.weight_decay < 0.0) {
    throw UsageError("config: invalid optimizer settings");
  }
  if (t.grad_clip < 0.0 || t.lambda_adv < 0.0 || t.adv_start < 0) {
    throw UsageError("config: grad_clip, lambda_adv and adv_start must be non-negative");
  }
  if (!(t.prompt_min_fraction > 0.0 && t.prompt_min_fraction <= t.prompt_max_fraction &&
        t.prompt_max_fraction < 1.0)) {
    throw UsageError("config: prompt fractions must satisfy 0 < min <= max < 1");
  }
  if (t.prompt_min_frames < 1 || t.prompt_min_frames > t.prompt_max_frames) {
    throw UsageError("config: prompt frame clamp is empty");
  }
  if (t.min_frames < t.prompt_min_frames + 1) {
    throw UsageError("config: train.min_frames must leave frames outside the prompt segment");
  }
  if (t.log_every < 1 || t.checkpoint_every < 0 || t.eval_every < 0) {
    throw UsageError("config: invalid logging cadence");
  }
}

ModelConfig PaperScaleModel() {
  ModelConfig m;
  for (StackConfig* s : {&m.text_encoder, &m.prompt_encoder, &m.prosody, &m.generator, &m.decoder}) {
    s->ff_dim = 2048;
    s->hidden_dim = 512;
    s->heads = 8;
  }
  m.duration_dim = m.pitch_dim = m.energy_dim = 512;
  m.film_heads = 8;
  m.mapped_style_dim = 256;
  m.noise_dim = 64;
  m.global_style_dim = 512;
  m.style_channels = 512;
  m.discriminator_hidden = 128;
  return m;
}

std::string HexHash(uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace sftts::model
