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

// Objective metrics. All are pure functions of their inputs.

#ifndef SFTTS_TASKS_METRICS_H_
#define SFTTS_TASKS_METRICS_H_

#include <functional>
#include <string>
#include <vector>

#include "sftts/corpus/toy.h"
#include "sftts/dsp/features.h"
#include "sftts/model/model.h"

namespace sftts::tasks {

// Voiced values of a track, in order.
std::vector<double> VoicedValues(const dsp::PitchTrack& t);
// Linear interpolation of `v` onto `n` evenly spaced points (ends kept).
std::vector<double> LinearResample(const std::vector<double>& v, size_t n);

// Pearson correlation of two contours after resampling both to the shorter
// length. Needs at least 2 points each; a constant contour throws DataError.
double F0Pcc(const std::vector<double>& a, const std::vector<double>& b);
double F0Pcc(const dsp::PitchTrack& a, const dsp::PitchTrack& b);

// Mean absolute local cost along the cheapest warping path of the two
// mean-variance normalised contours; moves (1,0), (0,1), (1,1). Among equal
// costs the shorter path wins, which keeps the metric symmetric.
double F0Dtw(const std::vector<double>& a, const std::vector<double>& b);
double F0Dtw(const dsp::PitchTrack& a, const dsp::PitchTrack& b);

// Root mean squared frame difference; lengths must match.
double DurationRmse(const std::vector<int>& pred, const std::vector<int>& ref);

// Speaker-embedding similarity with a pluggable embedder; the default is the
// model's own global style embedder.
using Embedder = std::function<std::vector<double>(const Tensor& mel)>;
Embedder GlobalStyleEmbedder(const model::Model& m);
double CosineSimilarity(const std::vector<double>& a, const std::vector<double>& b);
double EmbedSimilarity(const Tensor& a, const Tensor& b, const Embedder& embed);

// Fraction of frames whose nearest toy phoneme template matches the phoneme
// the durations place there.
double TemplateAccuracy(const corpus::ToyOracle& oracle, const Tensor& mel,
                        const std::vector<int>& phonemes, const std::vector<int>& durations,
                        int language);

struct MetricRow {
  std::string id;
  std::string metric;
  double value = 0.0;
};
inline constexpr char kMetricsCsvHeader[] = "id,metric,value";
std::string FormatMetricRow(const MetricRow& r);
void WriteMetricsCsv(const std::string& path, const std::vector<MetricRow>& rows);

}  // namespace sftts::tasks

#endif  // SFTTS_TASKS_METRICS_H_
