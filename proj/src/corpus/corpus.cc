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

#include "sftts/corpus/corpus.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sftts/common/error.h"
#include "sftts/corpus/matrix_file.h"

namespace sftts::corpus {
namespace fs = std::filesystem;

namespace {

std::string Exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string JoinInts(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s.push_back(',');
    s += std::to_string(v[i]);
  }
  return s;
}

// Parses the `key=value` tokens after the leading fields of a manifest line.
class Fields {
 public:
  Fields(std::istringstream& is, std::string where) : where_(std::move(where)) {
    std::string tok;
    while (is >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw DataError(where_ + ": malformed field '" + tok + "'");
      kv_[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
  }
  const std::string& Str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw DataError(where_ + ": missing field '" + key + "'");
    return it->second;
  }
  int64_t Int(const std::string& key) const {
    const std::string& s = Str(key);
    int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw DataError(where_ + ": field '" + key + "' is not an integer");
    }
    return v;
  }
  double Real(const std::string& key) const {
    try {
      size_t used = 0;
      const double v = std::stod(Str(key), &used);
      if (used != Str(key).size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::logic_error&) {
      throw DataError(where_ + ": field '" + key + "' is not a number");
    }
  }
  std::vector<int> Ints(const std::string& key) const {
    std::vector<int> out;
    const std::string& s = Str(key);
    if (s.empty()) return out;
    size_t start = 0;
    while (start <= s.size()) {
      const size_t comma = std::min(s.find(',', start), s.size());
      int v = 0;
      auto [p, ec] = std::from_chars(s.data() + start, s.data() + comma, v);
      if (ec != std::errc() || p != s.data() + comma) {
        throw DataError(where_ + ": field '" + key + "' is not an integer list");
      }
      out.push_back(v);
      start = comma + 1;
    }
    return out;
  }

 private:
  std::string where_;
  std::map<std::string, std::string> kv_;
};

std::string FeatPath(const std::string& dir, const std::string& id, const char* ext) {
  return (fs::path(dir) / "feats" / (id + ext)).string();
}

}  // namespace

const char* SplitName(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split ParseSplit(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw DataError("unknown split '" + s + "'");
}

uint64_t Fnv1a(const std::string& s, uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

const Utterance& Corpus::Find(const std::string& id) const {
  auto it = std::lower_bound(utterances.begin(), utterances.end(), id,
                             [](const Utterance& u, const std::string& k) { return u.id < k; });
  if (it == utterances.end() || it->id != id) throw DataError("corpus: no utterance '" + id + "'");
  return *it;
}

const SpeakerInfo& Corpus::Speaker(const std::string& id) const {
  for (const auto& s : speakers)
    if (s.id == id) return s;
  throw DataError("corpus: no speaker '" + id + "'");
}

std::vector<const Utterance*> Corpus::InSplit(Split s) const {
  std::vector<const Utterance*> out;
  for (const auto& u : utterances)
    if (u.split == s) out.push_back(&u);
  return out;
}

void Validate(const Corpus& c) {
  for (size_t i = 0; i < c.utterances.size(); ++i) {
    const Utterance& u = c.utterances[i];
    const std::string where = "utterance '" + u.id + "': ";
    if (i > 0 && !(c.utterances[i - 1].id < u.id)) {
      throw DataError(where + "ids must be unique and sorted");
    }
    if (u.phonemes.empty()) throw DataError(where + "no phonemes");
    if (u.phonemes.size() != u.durations.size()) {
      throw DataError(where + "phoneme and duration counts differ");
    }
    int64_t total = 0;
    for (int d : u.durations) {
      if (d < 0) throw DataError(where + "negative duration");
      total += d;
    }
    if (u.mel.rank() != 2 || u.mel.dim(1) != dsp::kNumMels) {
      throw DataError(where + "mel must be T x 80, got " + ShapeString(u.mel.shape()));
    }
    if (total != u.frames()) {
      throw DataError(where + "durations sum to " + std::to_string(total) + " but mel has " +
                      std::to_string(u.frames()) + " frames");
    }
    const auto t = static_cast<size_t>(u.frames());
    if (u.f0.size() != t || u.voiced.size() != t || u.energy.size() != t) {
      throw DataError(where + "frame feature lengths differ from the mel");
    }
    for (int p : u.phonemes) {
      if (p < 0 || p >= c.num_phonemes()) throw DataError(where + "phoneme id out of range");
      if (c.phonemes[p].language != u.language) {
        throw DataError(where + "phoneme '" + c.phonemes[p].symbol +
                        "' is outside the utterance language's alphabet");
      }
    }
    c.Speaker(u.speaker);
  }
}

std::map<std::string, dsp::SpeakerStats> ComputeSpeakerStats(const Corpus& c) {
  struct Acc {
    double f0_sum = 0, f0_sq = 0, e_sum = 0, e_sq = 0;
    int64_t f0_n = 0, e_n = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& u : c.utterances) {
    Acc& a = acc[u.speaker];
    for (size_t t = 0; t < u.f0.size(); ++t) {
      if (u.voiced[t]) {
        a.f0_sum += u.f0[t];
        a.f0_sq += double(u.f0[t]) * u.f0[t];
        ++a.f0_n;
      }
      a.e_sum += u.energy[t];
      a.e_sq += double(u.energy[t]) * u.energy[t];
      ++a.e_n;
    }
  }
  std::map<std::string, dsp::SpeakerStats> out;
  for (const auto& [id, a] : acc) {
    dsp::SpeakerStats s;
    s.speaker_id = id;
    if (a.f0_n > 0) {
      s.f0_mean = a.f0_sum / a.f0_n;
      s.f0_std = std::sqrt(std::max(0.0, a.f0_sq / a.f0_n - s.f0_mean * s.f0_mean));
    } else {
      s.f0_std = 0;
    }
    if (a.e_n > 0) {
      s.energy_mean = a.e_sum / a.e_n;
      s.energy_std = std::sqrt(std::max(0.0, a.e_sq / a.e_n - s.energy_mean * s.energy_mean));
    }
    dsp::ValidateStats(s);
    out[id] = s;
  }
  return out;
}

dsp::UnitSequence UnitsFor(const Corpus& c, const Utterance& u) {
  auto it = c.stats.find(u.speaker);
  if (it == c.stats.end()) throw DataError("corpus: no statistics for speaker '" + u.speaker + "'");
  const std::vector<double> f0(u.f0.begin(), u.f0.end());
  const std::vector<double> energy(u.energy.begin(), u.energy.end());
  const std::vector<char> voiced(u.voiced.begin(), u.voiced.end());
  return dsp::ExtractUnits(u.durations, f0, voiced, energy, it->second);
}

void WriteCorpus(const Corpus& c, const std::string& dir, bool force) {
  Validate(c);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw UsageError("corpus: output directory '" + dir + "' exists (use --force)");
    fs::remove_all(dir);
  }
  fs::create_directories(fs::path(dir) / "feats");
  std::ostringstream m;
  m << "sftts-corpus " << kCorpusSchemaVersion << "\n";
  if (!c.toy_spec.empty()) m << "toyspec " << c.toy_spec << "\n";
  for (size_t i = 0; i < c.phonemes.size(); ++i) {
    const auto& p = c.phonemes[i];
    m << "phoneme " << i << " " << p.symbol << " lang=" << p.language
      << " voiced=" << (p.voiced ? 1 : 0) << "\n";
  }
  for (const auto& s : c.speakers) {
    m << "speaker " << s.id << " lang=" << s.language << " f0_base=" << Exact(s.f0_base)
      << " tilt=" << Exact(s.tilt) << "\n";
  }
  for (const auto& [id, s] : c.stats) {
    m << "stats " << id << " f0_mean=" << Exact(s.f0_mean) << " f0_std=" << Exact(s.f0_std)
      << " energy_mean=" << Exact(s.energy_mean) << " energy_std=" << Exact(s.energy_std)
      << "\n";
  }
  m << "splits train=" << c.InSplit(Split::kTrain).size()
    << " val=" << c.InSplit(Split::kVal).size() << " test=" << c.InSplit(Split::kTest).size()
    << "\n";
  for (const auto& u : c.utterances) {
    m << "utt " << u.id << " speaker=" << u.speaker << " lang=" << u.language
      << " style=" << u.style << " split=" << SplitName(u.split) << " frames=" << u.frames()
      << " phonemes=" << JoinInts(u.phonemes) << " durations=" << JoinInts(u.durations) << "\n";
    WriteF32(FeatPath(dir, u.id, ".mel"), u.mel);
    WriteF32(FeatPath(dir, u.id, ".f0"),
             Tensor({static_cast<int64_t>(u.f0.size())}, std::vector<float>(u.f0)));
    WriteU8(FeatPath(dir, u.id, ".vuv"), u.voiced);
    WriteF32(FeatPath(dir, u.id, ".energy"),
             Tensor({static_cast<int64_t>(u.energy.size())}, std::vector<float>(u.energy)));
  }
  std::ofstream f(fs::path(dir) / "manifest.txt");
  if (!f) throw DataError("corpus: cannot write manifest in " + dir);
  f << m.str();
}

Corpus LoadCorpus(const std::string& dir) {
  const fs::path manifest = fs::path(dir) / "manifest.txt";
  std::ifstream f(manifest);
  if (!f) throw DataError("corpus: no manifest at " + manifest.string());
  Corpus c;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  int64_t want_train = -1, want_val = -1, want_test = -1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string kind;
    is >> kind;
    const std::string where = "manifest line " + std::to_string(line_no);
    if (!have_header) {
      int version = 0;
      if (kind != "sftts-corpus" || !(is >> version)) {
        throw DataError("corpus: " + manifest.string() + " has no schema header");
      }
      if (version != kCorpusSchemaVersion) {
        throw DataError("corpus: unsupported schema version " + std::to_string(version) +
                        " (expected " + std::to_string(kCorpusSchemaVersion) + ")");
      }
      have_header = true;
    } else if (kind == "toyspec") {
      std::getline(is >> std::ws, c.toy_spec);
    } else if (kind == "phoneme") {
      size_t idx = 0;
      PhonemeInfo p;
      is >> idx >> p.symbol;
      Fields fl(is, where);
      if (idx != c.phonemes.size()) throw DataError(where + ": phoneme ids must be dense");
      p.language = static_cast<int>(fl.Int("lang"));
      p.voiced = fl.Int("voiced") != 0;
      c.phonemes.push_back(p);
    } else if (kind == "speaker") {
      SpeakerInfo s;
      is >> s.id;
      Fields fl(is, where);
      s.language = static_cast<int>(fl.Int("lang"));
      s.f0_base = fl.Real("f0_base");
      s.tilt = fl.Real("tilt");
      c.speakers.push_back(s);
    } else if (kind == "stats") {
      dsp::SpeakerStats s;
      is >> s.speaker_id;
      Fields fl(is, where);
      s.f0_mean = fl.Real("f0_mean");
      s.f0_std = fl.Real("f0_std");
      s.energy_mean = fl.Real("energy_mean");
      s.energy_std = fl.Real("energy_std");
      dsp::ValidateStats(s);
      c.stats[s.speaker_id] = s;
    } else if (kind == "splits") {
      Fields fl(is, where);
      want_train = fl.Int("train");
      want_val = fl.Int("val");
      want_test = fl.Int("test");
    } else if (kind == "utt") {
      Utterance u;
      is >> u.id;
      const std::string rec = "utterance '" + u.id + "'";
      Fields fl(is, rec);
      u.speaker = fl.Str("speaker");
      u.language = static_cast<int>(fl.Int("lang"));
      u.style = fl.Str("style");
      u.split = ParseSplit(fl.Str("split"));
      u.phonemes = fl.Ints("phonemes");
      u.durations = fl.Ints("durations");
      const int64_t frames = fl.Int("frames");
      try {
        u.mel = ReadF32(FeatPath(dir, u.id, ".mel"));
        const Tensor f0 = ReadF32(FeatPath(dir, u.id, ".f0"));
        u.f0.assign(f0.values().begin(), f0.values().end());
        u.voiced = ReadU8(FeatPath(dir, u.id, ".vuv"));
        const Tensor e = ReadF32(FeatPath(dir, u.id, ".energy"));
        u.energy.assign(e.values().begin(), e.values().end());
      } catch (const DataError& e) {
        throw DataError("corpus: " + rec + ": " + e.what());
      }
      if (u.frames() != frames) throw DataError("corpus: " + rec + ": frame count mismatch");
      c.utterances.push_back(std::move(u));
    } else {
      throw DataError(where + ": unknown record kind '" + kind + "'");
    }
  }
  if (!have_header) throw DataError("corpus: empty manifest at " + manifest.string());
  std::sort(c.utterances.begin(), c.utterances.end(),
            [](const Utterance& a, const Utterance& b) { return a.id < b.id; });
  Validate(c);
  if (want_train >= 0) {
    if (static_cast<int64_t>(c.InSplit(Split::kTrain).size()) != want_train ||
        static_cast<int64_t>(c.InSplit(Split::kVal).size()) != want_val ||
        static_cast<int64_t>(c.InSplit(Split::kTest).size()) != want_test) {
      throw DataError("corpus: split counts disagree with the manifest summary");
    }
  }
  if (c.stats.empty() && !c.utterances.empty()) c.stats = ComputeSpeakerStats(c);
  return c;
}

}  // namespace sftts::corpus
