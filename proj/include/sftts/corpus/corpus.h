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

// In-memory corpus and its directory format.
//
// Directory layout:
//   manifest.txt              line-oriented index (see WriteCorpus)
//   feats/<utt>.mel           f32 (T x 80) log mel
//   feats/<utt>.f0            f32 (T) Hz, 0 when unvoiced
//   feats/<utt>.vuv           u8 (T) voiced flags
//   feats/<utt>.energy        f32 (T)

#ifndef SFTTS_CORPUS_CORPUS_H_
#define SFTTS_CORPUS_CORPUS_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sftts/dsp/features.h"
#include "sftts/numerics/tensor.h"

namespace sftts::corpus {

inline constexpr int kCorpusSchemaVersion = 1;

enum class Split { kTrain, kVal, kTest };
const char* SplitName(Split s);
Split ParseSplit(const std::string& s);

struct PhonemeInfo {
  std::string symbol;
  int language = 0;
  bool voiced = true;
};

struct SpeakerInfo {
  std::string id;
  int language = 0;
  double f0_base = 0.0;  // generator parameter (toy corpora only; 0 otherwise)
  double tilt = 0.0;
};

struct Utterance {
  std::string id;
  std::string speaker;
  int language = 0;
  std::string style;
  Split split = Split::kTrain;
  std::vector<int> phonemes;   // global phoneme ids
  std::vector<int> durations;  // frames per phoneme, sums to T
  Tensor mel;                  // T x 80
  std::vector<float> f0;
  std::vector<unsigned char> voiced;
  std::vector<float> energy;

  int64_t frames() const { return mel.empty() ? 0 : mel.dim(0); }
};

struct Corpus {
  std::vector<PhonemeInfo> phonemes;
  std::vector<SpeakerInfo> speakers;
  std::map<std::string, dsp::SpeakerStats> stats;
  std::vector<Utterance> utterances;  // sorted by id
  // Free-form generator description (key=value ...) or empty.
  std::string toy_spec;

  const Utterance& Find(const std::string& id) const;
  const SpeakerInfo& Speaker(const std::string& id) const;
  std::vector<const Utterance*> InSplit(Split s) const;
  int num_phonemes() const { return static_cast<int>(phonemes.size()); }
};

// Checks the structural invariants (alignment sums, phoneme ranges, stream
// lengths); throws DataError naming the offending record.
void Validate(const Corpus& c);

// Per-speaker statistics: F0 over voiced frames, energy over all frames.
// Throws NumericError for a degenerate speaker.
std::map<std::string, dsp::SpeakerStats> ComputeSpeakerStats(const Corpus& c);

// Quantised duration/pitch/energy units for one utterance.
dsp::UnitSequence UnitsFor(const Corpus& c, const Utterance& u);

// Writes the directory; refuses a non-empty directory unless `force`.
void WriteCorpus(const Corpus& c, const std::string& dir, bool force);
Corpus LoadCorpus(const std::string& dir);

// FNV-1a 64-bit, used for per-record seeding and hashing.
uint64_t Fnv1a(const std::string& s, uint64_t h = 1469598103934665603ULL);

}  // namespace sftts::corpus

#endif  // SFTTS_CORPUS_CORPUS_H_
