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

#include "sftts/cli/cli.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "sftts/common/error.h"
#include "sftts/corpus/corpus.h"
#include "sftts/corpus/matrix_file.h"
#include "sftts/corpus/toy.h"
#include "sftts/dsp/features.h"
#include "sftts/dsp/wav.h"
#include "sftts/tasks/metrics.h"
#include "sftts/tasks/plot.h"
#include "sftts/tasks/synthesis.h"
#include "sftts/training/checkpoint.h"
#include "sftts/training/trainer.h"

namespace sftts::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ------------------------------------------------------------------ helpers

// Run record written next to every command's outputs. No timestamps or
// hostnames: two identical invocations write identical manifests.
class Manifest {
 public:
  Manifest(const std::string& command, uint64_t seed) {
    j_["tool"] = "sftts";
    j_["version"] = kVersion;
    j_["command"] = command;
    j_["seed"] = seed;
    j_["build"] = {{"compiler", __VERSION__}, {"cxx", __cplusplus}};
  }
  json& operator[](const std::string& k) { return j_[k]; }
  void Output(const fs::path& p) { j_["outputs"].push_back(p.filename().string()); }
  void Write(const fs::path& dir, const std::string& name = "manifest.json") const {
    std::ofstream f(dir / name, std::ios::trunc);
    if (!f) throw DataError("cannot write manifest in " + dir.string());
    f << j_.dump(2) << '\n';
  }

 private:
  json j_;
};

std::string CorpusPath(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kCorpusRootEnv); env != nullptr && *env != '\0') return env;
  return "";
}

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

bool IsCheckpoint(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  char magic[4] = {};
  f.read(magic, 4);
  return f && std::string(magic, 4) == "SFTC";
}

void WriteUnitsCsv(const fs::path& path, const dsp::UnitSequence& u,
                   const std::vector<int>& phonemes) {
  std::ofstream f(path, std::ios::trunc);
  f << "index,phoneme,duration_unit,pitch_unit,energy_unit,frames,pitch_z\n";
  for (int64_t i = 0; i < u.size(); ++i) {
    f << i << ',' << phonemes[i] << ',' << u.duration[i] << ',' << u.pitch[i] << ','
      << u.energy[i] << ',' << dsp::DequantizeDuration(u.duration[i]) << ','
      << dsp::DequantizeUnit(u.pitch[i], dsp::kPitchCodebook) << '\n';
  }
}

void WriteSeriesCsv(const fs::path& path, const std::string& column,
                    const std::vector<double>& v) {
  std::ofstream f(path, std::ios::trunc);
  f.precision(9);
  f << "frame," << column << '\n';
  for (size_t i = 0; i < v.size(); ++i) f << i << ',' << v[i] << '\n';
}

// A prompt or text source resolved against an optional corpus.
struct Source {
  Tensor mel;
  int language = -1;
  const corpus::Utterance* utt = nullptr;
};

Source ResolveMel(const std::string& src, const corpus::Corpus* c) {
  Source s;
  if (fs::is_regular_file(src)) {
    if (fs::path(src).extension() == ".wav") {
      const dsp::Wav w = dsp::ReadWav(src);
      if (w.sample_rate != dsp::kSampleRate) {
        throw DataError(src + ": sample rate " + std::to_string(w.sample_rate) + ", expected " +
                        std::to_string(dsp::kSampleRate));
      }
      s.mel = dsp::ExtractMel(w.samples);
    } else {
      s.mel = corpus::ReadF32(src);
    }
    return s;
  }
  if (c != nullptr) {
    for (const corpus::Utterance& u : c->utterances) {
      if (u.id == src) {
        s.mel = u.mel;
        s.language = u.language;
        s.utt = &u;
        return s;
      }
    }
  }
  throw DataError("prompt '" + src + "' is neither a file nor an utterance id" +
                  (c == nullptr ? " (no corpus loaded)" : ""));
}

std::vector<int> ParsePhonemes(const std::string& text, const corpus::Corpus* c, int* language) {
  std::vector<int> ids;
  *language = -1;
  for (const std::string& tok : Split(text, ' ')) {
    int id = -1;
    if (c != nullptr) {
      for (size_t i = 0; i < c->phonemes.size(); ++i) {
        if (c->phonemes[i].symbol == tok) id = static_cast<int>(i);
      }
    }
    if (id < 0) {
      try {
        size_t used = 0;
        id = std::stoi(tok, &used);
        if (used != tok.size()) id = -1;
      } catch (const std::exception&) {
        id = -1;
      }
    }
    if (id < 0) throw DataError("unknown phoneme '" + tok + "'");
    ids.push_back(id);
  }
  if (ids.empty()) throw DataError("empty --text");
  if (c != nullptr && ids[0] < c->num_phonemes()) *language = c->phonemes[ids[0]].language;
  return ids;
}

std::optional<corpus::Corpus> MaybeLoadCorpus(const std::string& flag) {
  const std::string path = CorpusPath(flag);
  if (path.empty()) return std::nullopt;
  return corpus::LoadCorpus(path);
}

// ------------------------------------------------------------------ toygen

struct ToygenArgs {
  std::string out;
  uint64_t seed = 1234;
  corpus::ToySpec spec;
  std::string styles;
  bool wav = false;
  bool force = false;
};

int Toygen(const ToygenArgs& a, std::ostream& out) {
  corpus::ToySpec spec = a.spec;
  spec.seed = a.seed;
  if (!a.styles.empty()) spec.styles = Split(a.styles, ',');
  spec.Validate();
  const corpus::Corpus c = corpus::GenerateCorpus(spec);
  corpus::WriteCorpus(c, a.out, a.force);
  Manifest m("toygen", a.seed);
  m["toy_spec"] = spec.Format();
  m["utterances"] = c.utterances.size();
  if (a.wav) {
    const corpus::ToyWorld world(spec);
    const fs::path wav_dir = fs::path(a.out) / "wav";
    EnsureDir(wav_dir);
    for (int s = 0; s < static_cast<int>(world.speakers().size()); ++s) {
      for (const auto& style : spec.styles) {
        for (int i = 0; i < spec.utterances_per_speaker_style; ++i) {
          const corpus::ToyUtterance tu = corpus::GenerateUtterance(world, s, style, i);
          const auto audio =
              corpus::RenderWaveform(world, tu, Rng::Derive(spec.seed, corpus::Fnv1a(tu.utt.id)));
          dsp::WriteWav((wav_dir / (tu.utt.id + ".wav")).string(), audio, dsp::kSampleRate);
        }
      }
    }
    m["wav"] = true;
  }
  m.Write(a.out, "toygen.json");
  out << "wrote " << c.utterances.size() << " utterances (" << c.speakers.size()
      << " speakers) to " << a.out << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------ prepare

struct PrepareArgs {
  std::string corpus, out, audio;
  uint64_t seed = 0;
  bool force = false;
};

int Prepare(const PrepareArgs& a, std::ostream& out) {
  const std::string src = CorpusPath(a.corpus);
  if (src.empty()) throw UsageError("prepare: --corpus or " + std::string(kCorpusRootEnv) + " required");
  corpus::Corpus c = corpus::LoadCorpus(src);
  int64_t from_audio = 0;
  if (!a.audio.empty()) {
    for (corpus::Utterance& u : c.utterances) {
      const fs::path wav = fs::path(a.audio) / (u.id + ".wav");
      if (!fs::exists(wav)) continue;
      const dsp::Wav w = dsp::ReadWav(wav.string());
      if (w.sample_rate != dsp::kSampleRate) {
        throw DataError(wav.string() + ": sample rate " + std::to_string(w.sample_rate));
      }
      Tensor mel = dsp::ExtractMel(w.samples);
      if (mel.dim(0) != u.frames()) {
        throw DataError(wav.string() + ": " + std::to_string(mel.dim(0)) +
                        " frames but the alignment covers " + std::to_string(u.frames()));
      }
      const dsp::PitchTrack f0 = dsp::EstimateF0(w.samples);
      const std::vector<double> energy = dsp::FrameEnergy(w.samples);
      u.mel = std::move(mel);
      u.f0.assign(f0.hz.begin(), f0.hz.end());
      u.voiced.assign(f0.voiced.begin(), f0.voiced.end());
      u.energy.assign(energy.begin(), energy.end());
      ++from_audio;
    }
  }
  c.stats = corpus::ComputeSpeakerStats(c);
  corpus::Validate(c);
  corpus::WriteCorpus(c, a.out, a.force);

  const fs::path units = fs::path(a.out) / "units.csv";
  std::ofstream f(units, std::ios::trunc);
  f << "utterance,index,phoneme,duration_unit,pitch_unit,energy_unit\n";
  for (const corpus::Utterance& u : c.utterances) {
    const dsp::UnitSequence s = corpus::UnitsFor(c, u);
    for (int64_t i = 0; i < s.size(); ++i) {
      f << u.id << ',' << i << ',' << u.phonemes[i] << ',' << s.duration[i] << ',' << s.pitch[i]
        << ',' << s.energy[i] << '\n';
    }
  }
  Manifest m("prepare", a.seed);
  m["source"] = src;
  m["from_audio"] = from_audio;
  m.Output(units);
  m.Write(a.out, "prepare.json");
  out << "prepared " << c.utterances.size() << " utterances (" << from_audio
      << " re-extracted from audio) into " << a.out << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  std::string config, corpus, out;
  std::vector<std::string> sets;
  std::optional<uint64_t> seed;
  std::optional<int64_t> steps;
  bool resume = false;
  bool force = false;
  bool quiet = false;
};

model::RunConfig BuildConfig(const TrainArgs& a) {
  model::RunConfig cfg = a.config.empty() ? model::RunConfig{} : model::RunConfig::Load(a.config);
  for (const std::string& kv : a.sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    cfg.Set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (a.seed) cfg.seed = *a.seed;
  if (a.steps) cfg.train.steps = *a.steps;
  if (!a.corpus.empty()) cfg.corpus = a.corpus;
  cfg.corpus = CorpusPath(cfg.corpus);
  if (cfg.corpus.empty()) {
    throw UsageError("train: no corpus (--corpus, data.corpus or " + std::string(kCorpusRootEnv) + ")");
  }
  cfg.Validate();
  return cfg;
}

int Train(const TrainArgs& a, std::ostream& out) {
  const model::RunConfig cfg = BuildConfig(a);
  const fs::path dir(a.out);
  const fs::path latest = dir / "checkpoint.sftc";
  if (a.resume && fs::exists(latest)) {
    const training::Checkpoint head = training::LoadCheckpoint(latest.string());
    training::CheckConfigHash(head, cfg.Hash(), a.force);
    auto f = head.scalars.find("finished");
    if ((f != head.scalars.end() && f->second != 0) || head.step >= cfg.train.steps) {
      out << "training already complete at step " << head.step << " (" << latest.string()
          << ")\n";
      return kExitOk;
    }
  }
  const corpus::Corpus corpus = corpus::LoadCorpus(cfg.corpus);
  EnsureDir(dir);
  cfg.Save((dir / "config.txt").string());

  training::TrainOptions opts;
  opts.out_dir = a.out;
  opts.resume = a.resume;
  opts.force = a.force;
  const int64_t every = std::max<int64_t>(1, cfg.train.steps / 20);
  if (!a.quiet) {
    opts.on_step = [&](const training::LossRecord& r) {
      if (r.step % every == 0 || r.step == 1) {
        out << "step " << r.step << " l1 " << r.l1 << " ce " << r.ce_d << '/' << r.ce_p << '/'
            << r.ce_e << " g_adv " << r.g_adv << " d " << r.d_loss << " lr " << r.lr << '\n';
      }
    };
    opts.on_eval = [&](int64_t step, const training::EvalResult& e) {
      out << "eval " << step << " l1 " << e.l1 << " unit-acc " << e.accuracy.duration << '/'
          << e.accuracy.pitch << '/' << e.accuracy.energy << '\n';
    };
  }
  const training::TrainSummary s = training::Train(cfg, corpus, opts);

  Manifest m("train", cfg.seed);
  m["config_hash"] = model::HexHash(cfg.Hash());
  m["corpus"] = cfg.corpus;
  m["steps"] = s.steps;
  m["early_stopped"] = s.early_stopped;
  if (s.evaluated) {
    m["eval"] = {{"l1", s.last_eval.l1},
                 {"acc_duration", s.last_eval.accuracy.duration},
                 {"acc_pitch", s.last_eval.accuracy.pitch},
                 {"acc_energy", s.last_eval.accuracy.energy}};
  }
  m.Output(dir / "config.txt");
  m.Output(dir / "loss.csv");
  m.Output(latest);
  m.Write(dir);
  if (s.ran == 0) {
    out << "training already complete at step " << s.steps << '\n';
  } else {
    out << "trained " << s.ran << " steps (now at " << s.steps << ")"
        << (s.early_stopped ? ", targets reached" : "") << "; checkpoint " << s.checkpoint
        << '\n';
  }
  return kExitOk;
}

// ------------------------------------------------------------------ synth / analyze

struct SynthArgs {
  std::string checkpoint, corpus, out, id = "synth";
  std::string text, text_utt, speaker_prompt, style_prompt;
  bool no_style_transfer = false;
  int pitch_offset = 0, duration_offset = 0, energy_offset = 0;
  uint64_t seed = 0;
  bool greedy = false;
  double temperature = 1.0;
  std::string mode = "all";  // analyze only
};

struct Prepared {
  tasks::LoadedModel loaded;
  std::optional<corpus::Corpus> corpus;
  tasks::SynthesisRequest req;
  const corpus::Utterance* text_utt = nullptr;
  Source speaker, style;
  bool has_style = false;
};

Prepared PrepareRequest(const SynthArgs& a) {
  Prepared p;
  p.loaded = tasks::LoadTrainedModel(a.checkpoint);
  p.corpus = MaybeLoadCorpus(a.corpus);
  const corpus::Corpus* c = p.corpus ? &*p.corpus : nullptr;
  tasks::SynthesisRequest& r = p.req;
  r.id = a.id;
  if (!a.text_utt.empty()) {
    if (c == nullptr) throw UsageError("--text-utt needs a corpus");
    p.text_utt = &c->Find(a.text_utt);
    r.phonemes = p.text_utt->phonemes;
    r.text_language = p.text_utt->language;
  } else {
    r.phonemes = ParsePhonemes(a.text, c, &r.text_language);
  }
  p.speaker = ResolveMel(a.speaker_prompt, c);
  r.speaker_prompt = p.speaker.mel;
  r.prompt_language = p.speaker.language;
  if (!a.style_prompt.empty()) {
    p.style = ResolveMel(a.style_prompt, c);
    r.style_prompt = p.style.mel;
    p.has_style = true;
  }
  r.offsets = {a.duration_offset, a.pitch_offset, a.energy_offset};
  r.seed = a.seed;
  r.sampling.greedy = a.greedy;
  r.sampling.temperature = a.temperature;
  return p;
}

void WriteSynthesis(const fs::path& dir, const std::string& stem,
                    const tasks::SynthesisResult& res, const std::vector<int>& phonemes,
                    Manifest& m) {
  const fs::path mel = dir / (stem + ".out.mel");
  corpus::WriteF32(mel.string(), res.mel);
  m.Output(mel);
  const fs::path dur = dir / (stem + ".out.dur");
  corpus::WriteI32(dur.string(), res.durations, {static_cast<int64_t>(res.durations.size())});
  m.Output(dur);
  const fs::path units = dir / (stem + ".units.csv");
  WriteUnitsCsv(units, res.units, phonemes);
  m.Output(units);
  const fs::path pitch = dir / (stem + ".pitch.csv");
  WriteSeriesCsv(pitch, "pitch_z", res.pitch_proxy);
  m.Output(pitch);
  const fs::path png = dir / (stem + ".mel.png");
  tasks::WritePng(png.string(), tasks::RenderMel(res.mel));
  m.Output(png);
  const fs::path ppng = dir / (stem + ".pitch.png");
  tasks::WritePng(ppng.string(), tasks::RenderContours({res.pitch_proxy}));
  m.Output(ppng);
}

void DescribeRequest(const SynthArgs& a, const Prepared& p, Manifest& m) {
  m["checkpoint"] = a.checkpoint;
  m["checkpoint_step"] = p.loaded.step;
  m["config_hash"] = model::HexHash(p.loaded.config.Hash());
  m["request"] = {{"id", a.id},
                  {"phonemes", p.req.phonemes},
                  {"speaker_prompt", a.speaker_prompt},
                  {"style_prompt", a.style_prompt},
                  {"offsets", {a.duration_offset, a.pitch_offset, a.energy_offset}},
                  {"greedy", a.greedy},
                  {"temperature", a.temperature}};
}

// Reference files for the metrics command.
void WriteReferences(const fs::path& dir, const std::string& stem, const Prepared& p,
                     Manifest& m) {
  const fs::path prompt = dir / (stem + ".prompt.mel");
  corpus::WriteF32(prompt.string(), p.has_style ? p.style.mel : p.speaker.mel);
  m.Output(prompt);
  const fs::path speaker = dir / (stem + ".speaker.mel");
  corpus::WriteF32(speaker.string(), p.speaker.mel);
  m.Output(speaker);
  if (p.text_utt != nullptr) {
    const fs::path ref = dir / (stem + ".ref.dur");
    corpus::WriteI32(ref.string(), p.text_utt->durations,
                     {static_cast<int64_t>(p.text_utt->durations.size())});
    m.Output(ref);
  }
}

int Synth(const SynthArgs& a, std::ostream& out) {
  const Prepared p = PrepareRequest(a);
  const tasks::SynthesisResult res = tasks::Synthesize(*p.loaded.model, p.req);
  const fs::path dir(a.out);
  EnsureDir(dir);
  Manifest m("synth", a.seed);
  DescribeRequest(a, p, m);
  m["style_transfer"] = res.style_transfer;
  m["cross_lingual"] = res.cross_lingual;
  WriteSynthesis(dir, a.id, res, p.req.phonemes, m);
  WriteReferences(dir, a.id, p, m);
  m.Write(dir);
  out << a.id << ": " << res.mel.dim(0) << " frames, mean pitch z "
      << tasks::MeanDequantizedPitch(res.units)
      << (res.style_transfer ? ", style transfer" : ", zero-shot")
      << (res.cross_lingual ? ", cross-lingual" : "") << '\n';
  return kExitOk;
}

int Analyze(const SynthArgs& a, std::ostream& out) {
  std::vector<std::string> modes;
  if (a.mode == "all") {
    modes = {"coarse", "filter-only", "source-only"};
  } else {
    modes = {a.mode};
  }
  const Prepared p = PrepareRequest(a);
  const fs::path dir(a.out);
  EnsureDir(dir);
  Manifest m("analyze", a.seed);
  DescribeRequest(a, p, m);

  std::optional<corpus::ToyWorld> world;
  if (p.corpus && !p.corpus->toy_spec.empty()) {
    world.emplace(corpus::ToySpec::Parse(p.corpus->toy_spec));
  }
  std::optional<corpus::ToyOracle> oracle;
  if (world) oracle.emplace(*world);

  std::vector<tasks::MetricRow> rows;
  for (const std::string& name : modes) {
    const tasks::SynthesisResult res =
        tasks::Synthesize(*p.loaded.model, p.req, model::ParseRepresentationMode(name));
    WriteSynthesis(dir, a.id + "." + name, res, p.req.phonemes, m);
    if (oracle) {
      const double acc = tasks::TemplateAccuracy(*oracle, res.mel, p.req.phonemes, res.durations,
                                                 p.req.text_language);
      rows.push_back({a.id, "template_accuracy." + name, acc});
      // F0 agreement with the style reference (the prompt that drives prosody).
      const Tensor& ref = p.has_style ? p.style.mel : p.speaker.mel;
      double pcc = std::nan("");
      try {
        pcc = tasks::F0Pcc(oracle->EstimateF0(res.mel), oracle->EstimateF0(ref));
      } catch (const DataError&) {
        // Undefined (too few voiced frames or a flat contour): recorded as NaN.
      }
      rows.push_back({a.id, "prompt_f0_pcc." + name, pcc});
    }
    out << a.id << " " << name << ": " << res.mel.dim(0) << " frames\n";
  }
  if (!rows.empty()) {
    const fs::path csv = dir / (a.id + ".analysis.csv");
    tasks::WriteMetricsCsv(csv.string(), rows);
    m.Output(csv);
    for (const auto& r : rows) out << "  " << r.metric << " = " << r.value << '\n';
  }
  m.Write(dir);
  return kExitOk;
}

// ------------------------------------------------------------------ metrics

struct MetricsArgs {
  std::string pairs, checkpoint, corpus, out;
  uint64_t seed = 0;
};

int Metrics(const MetricsArgs& a, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(a.pairs)) throw DataError("metrics: no directory " + a.pairs);
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(a.pairs)) {
    const std::string name = e.path().filename().string();
    const std::string suffix = ".out.mel";
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      ids.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw DataError("metrics: no <id>.out.mel files in " + a.pairs);

  const std::optional<corpus::Corpus> c = MaybeLoadCorpus(a.corpus);
  std::optional<corpus::ToyWorld> world;
  std::optional<corpus::ToyOracle> oracle;
  if (c && !c->toy_spec.empty()) {
    world.emplace(corpus::ToySpec::Parse(c->toy_spec));
    oracle.emplace(*world);
  } else {
    err << "metrics: no toy corpus, F0 metrics skipped\n";
  }
  std::optional<tasks::LoadedModel> loaded;
  tasks::Embedder embed;
  if (!a.checkpoint.empty()) {
    loaded = tasks::LoadTrainedModel(a.checkpoint);
    embed = tasks::GlobalStyleEmbedder(*loaded->model);
  } else {
    err << "metrics: no checkpoint, SECS skipped\n";
  }

  const fs::path dir(a.pairs);
  std::vector<tasks::MetricRow> rows;
  auto guarded = [&](const std::string& id, const std::string& metric, auto fn) {
    double v = std::nan("");
    try {
      v = fn();
    } catch (const DataError& e) {
      err << "metrics: " << id << " " << metric << ": " << e.what() << '\n';
    }
    rows.push_back({id, metric, v});
  };
  for (const std::string& id : ids) {
    const Tensor outm = corpus::ReadF32((dir / (id + ".out.mel")).string());
    const fs::path prompt_path = dir / (id + ".prompt.mel");
    if (!fs::exists(prompt_path)) throw DataError("metrics: missing " + prompt_path.string());
    const Tensor prompt = corpus::ReadF32(prompt_path.string());
    if (oracle) {
      const dsp::PitchTrack fo = oracle->EstimateF0(outm), fp = oracle->EstimateF0(prompt);
      guarded(id, "f0_pcc", [&] { return tasks::F0Pcc(fo, fp); });
      guarded(id, "f0_dtw", [&] { return tasks::F0Dtw(fo, fp); });
    }
    if (loaded) {
      const fs::path sp = dir / (id + ".speaker.mel");
      const Tensor speaker = fs::exists(sp) ? corpus::ReadF32(sp.string()) : prompt;
      guarded(id, "secs", [&] { return tasks::EmbedSimilarity(outm, speaker, embed); });
    }
    const fs::path od = dir / (id + ".out.dur"), rd = dir / (id + ".ref.dur");
    if (fs::exists(od) && fs::exists(rd)) {
      guarded(id, "dur_rmse",
              [&] { return tasks::DurationRmse(corpus::ReadI32(od.string()), corpus::ReadI32(rd.string())); });
    }
  }
  const fs::path out_path(a.out);
  if (!out_path.parent_path().empty()) EnsureDir(out_path.parent_path());
  tasks::WriteMetricsCsv(a.out, rows);

  // Per-metric means over the pairs where the metric is defined.
  std::map<std::string, std::pair<double, int>> agg;
  for (const auto& r : rows) {
    if (std::isnan(r.value)) continue;
    agg[r.metric].first += r.value;
    agg[r.metric].second += 1;
  }
  const fs::path summary = out_path.parent_path() / (out_path.stem().string() + ".summary.csv");
  std::ofstream s(summary, std::ios::trunc);
  s << "metric,mean,count\n";
  s.precision(10);
  for (const auto& [k, v] : agg) {
    s << k << ',' << v.first / v.second << ',' << v.second << '\n';
    out << k << " mean " << v.first / v.second << " over " << v.second << " pairs\n";
  }
  Manifest m("metrics", a.seed);
  m["pairs"] = a.pairs;
  m["count"] = ids.size();
  if (loaded) m["checkpoint"] = a.checkpoint;
  m.Output(out_path);
  m.Output(summary);
  m.Write(out_path.parent_path().empty() ? fs::path(".") : out_path.parent_path(),
          out_path.stem().string() + ".manifest.json");
  return kExitOk;
}

// ------------------------------------------------------------------ inspect

struct InspectArgs {
  std::string path;
  bool tensors = false;
  uint64_t seed = 0;
};

int Inspect(const InspectArgs& a, std::ostream& out) {
  const fs::path p(a.path);
  if (fs::is_directory(p) && fs::exists(p / "manifest.txt")) {
    const corpus::Corpus c = corpus::LoadCorpus(a.path);
    out << "corpus " << a.path << "\n  phonemes " << c.num_phonemes() << "\n  speakers "
        << c.speakers.size() << '\n';
    for (corpus::Split s : {corpus::Split::kTrain, corpus::Split::kVal, corpus::Split::kTest}) {
      const auto utts = c.InSplit(s);
      int64_t frames = 0;
      for (const auto* u : utts) frames += u->frames();
      out << "  " << corpus::SplitName(s) << ' ' << utts.size() << " utterances, " << frames
          << " frames\n";
    }
    if (!c.toy_spec.empty()) out << "  toy " << c.toy_spec << '\n';
    return kExitOk;
  }
  if (fs::is_regular_file(p) && IsCheckpoint(p)) {
    const training::Checkpoint ck = training::LoadCheckpoint(a.path);
    const model::RunConfig cfg = model::RunConfig::Parse(ck.config_text);
    out << "checkpoint " << a.path << "\n  step " << ck.step << "\n  config hash "
        << model::HexHash(ck.config_hash) << (ck.config_hash == cfg.Hash() ? "" : " (stale)")
        << '\n';
    for (const auto& [k, v] : ck.scalars) out << "  " << k << ' ' << v << '\n';
    std::map<std::string, int64_t> groups;
    int64_t params = 0;
    for (const auto& [name, t] : ck.tensors) {
      if (name.rfind("param/", 0) != 0) continue;
      params += t.size();
      const std::string n = name.substr(6);
      groups[n.substr(0, n.find('.'))] += t.size();
    }
    out << "  parameters " << params << '\n';
    for (const auto& [g, n] : groups) out << "    " << g << ' ' << n << '\n';
    if (a.tensors) {
      for (const auto& [name, t] : ck.tensors) out << "  " << name << ' ' << ShapeString(t.shape()) << '\n';
    }
    out << "config:\n" << ck.config_text;
    return kExitOk;
  }
  if (fs::is_regular_file(p)) {
    const model::RunConfig cfg = model::RunConfig::Load(a.path);
    cfg.Validate();
    out << "# config hash " << model::HexHash(cfg.Hash()) << '\n' << cfg.Format();
    return kExitOk;
  }
  throw DataError("inspect: " + a.path + " is not a corpus, checkpoint or config");
}

// ------------------------------------------------------------------ dispatch

void AddSeed(CLI::App* app, uint64_t* seed) {
  app->add_option("--seed", *seed, "Random seed (recorded in the manifest)");
}

void AddRequestOptions(CLI::App* app, SynthArgs* a) {
  app->add_option("--checkpoint", a->checkpoint, "Trained checkpoint")->required();
  app->add_option("--corpus", a->corpus, "Corpus for symbols and utterance ids");
  app->add_option("--out", a->out, "Output directory")->required();
  app->add_option("--id", a->id, "Output file stem");
  auto* text = app->add_option("--text", a->text, "Phoneme symbols (or ids), space separated");
  auto* text_utt = app->add_option("--text-utt", a->text_utt, "Take the text of a corpus utterance");
  text->excludes(text_utt);
  app->add_option("--speaker-prompt", a->speaker_prompt,
                  "Speaker prompt: .mel/.wav file or corpus utterance id")
      ->required();
  auto* style = app->add_option("--style-prompt", a->style_prompt,
                                "Style prompt for the prosody model (defaults to the speaker prompt)");
  auto* plain = app->add_flag("--no-style-transfer", a->no_style_transfer,
                              "Refuse a separate style prompt");
  style->excludes(plain);
  app->add_option("--pitch-offset", a->pitch_offset, "Pitch unit offset");
  app->add_option("--duration-offset", a->duration_offset, "Duration unit offset");
  app->add_option("--energy-offset", a->energy_offset, "Energy unit offset");
  app->add_flag("--greedy", a->greedy, "Greedy unit decoding");
  app->add_option("--temperature", a->temperature, "Sampling temperature")->check(CLI::PositiveNumber);
  AddSeed(app, &a->seed);
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sftts: source-filter zero-shot TTS toolkit", "sftts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("sftts ") + kVersion);

  ToygenArgs tg;
  auto* toygen = app.add_subcommand("toygen", "Generate a synthetic toy corpus");
  toygen->add_option("--out", tg.out, "Corpus directory")->required();
  toygen->add_option("--speakers-per-language", tg.spec.speakers_per_language);
  toygen->add_option("--utterances", tg.spec.utterances_per_speaker_style,
                     "Utterances per speaker and style");
  toygen->add_option("--styles", tg.styles, "Comma-separated styles (neutral,expressive,deterministic)");
  toygen->add_option("--min-phonemes", tg.spec.min_phonemes);
  toygen->add_option("--max-phonemes", tg.spec.max_phonemes);
  toygen->add_option("--noise", tg.spec.mel_noise_std, "Per-bin mel noise std");
  toygen->add_option("--val-fraction", tg.spec.val_fraction);
  toygen->add_option("--test-fraction", tg.spec.test_fraction);
  toygen->add_flag("--wav", tg.wav, "Also render waveforms into <out>/wav");
  toygen->add_flag("--force", tg.force, "Overwrite a non-empty directory");
  AddSeed(toygen, &tg.seed);

  PrepareArgs pa;
  auto* prepare = app.add_subcommand("prepare", "Re-extract features and units over a corpus");
  prepare->add_option("--corpus", pa.corpus, "Input corpus");
  prepare->add_option("--out", pa.out, "Output corpus directory")->required();
  prepare->add_option("--audio", pa.audio, "Directory of <utt>.wav to extract features from");
  prepare->add_flag("--force", pa.force, "Overwrite a non-empty directory");
  AddSeed(prepare, &pa.seed);

  TrainArgs ta;
  uint64_t train_seed = 0;
  int64_t train_steps = 0;
  auto* train = app.add_subcommand("train", "Train (or resume) a model");
  train->add_option("--config", ta.config, "Config file (key = value)");
  train->add_option("--corpus", ta.corpus, "Corpus directory");
  train->add_option("--out", ta.out, "Run directory")->required();
  train->add_option("--set", ta.sets, "Override a config key (key=value)");
  auto* seed_opt = train->add_option("--seed", train_seed, "Random seed (overrides the config)");
  auto* steps_opt = train->add_option("--steps", train_steps, "Total steps (overrides the config)");
  train->add_flag("--resume", ta.resume, "Continue from <out>/checkpoint.sftc");
  train->add_flag("--force", ta.force, "Accept a checkpoint with a different config hash");
  train->add_flag("--quiet", ta.quiet, "No progress output");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Zero-shot, cross-lingual, style-transfer synthesis");
  AddRequestOptions(synth, &sa);

  SynthArgs aa;
  aa.id = "analysis";
  auto* analyze = app.add_subcommand("analyze", "Decode filter-only / source-only representations");
  AddRequestOptions(analyze, &aa);
  analyze->add_option("--mode", aa.mode, "coarse, filter-only, source-only or all")
      ->check(CLI::IsMember({"all", "coarse", "filter-only", "source-only"}));

  MetricsArgs ma;
  auto* metrics = app.add_subcommand("metrics", "Objective metrics over (output, prompt) pairs");
  metrics->add_option("--pairs", ma.pairs, "Directory of <id>.out.mel / <id>.prompt.mel")->required();
  metrics->add_option("--checkpoint", ma.checkpoint, "Checkpoint for SECS");
  metrics->add_option("--corpus", ma.corpus, "Toy corpus for F0 extraction");
  metrics->add_option("--out", ma.out, "CSV path")->required();
  AddSeed(metrics, &ma.seed);

  InspectArgs ia;
  auto* inspect = app.add_subcommand("inspect", "Describe a checkpoint, config or corpus");
  inspect->add_option("path", ia.path)->required();
  inspect->add_flag("--tensors", ia.tensors, "List every tensor of a checkpoint");
  AddSeed(inspect, &ia.seed);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*toygen) return Toygen(tg, out);
    if (*prepare) return Prepare(pa, out);
    if (*train) {
      if (*seed_opt) ta.seed = train_seed;
      if (*steps_opt) ta.steps = train_steps;
      return Train(ta, out);
    }
    if (*synth) return Synth(sa, out);
    if (*analyze) return Analyze(aa, out);
    if (*metrics) return Metrics(ma, out, err);
    if (*inspect) return Inspect(ia, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace sftts::cli
