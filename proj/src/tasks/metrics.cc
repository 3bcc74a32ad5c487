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

#include "sftts/tasks/metrics.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sftts/common/error.h"

namespace sftts::tasks {
namespace {

std::pair<double, double> MeanStd(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

std::vector<double> Standardize(const std::vector<double>& v) {
  const auto [m, s] = MeanStd(v);
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = s > 0.0 ? (v[i] - m) / s : 0.0;
  return out;
}

}  // namespace

std::vector<double> VoicedValues(const dsp::PitchTrack& t) {
  std::vector<double> out;
  for (size_t i = 0; i < t.hz.size(); ++i) {
    if (i < t.voiced.size() && t.voiced[i]) out.push_back(t.hz[i]);
  }
  return out;
}

std::vector<double> LinearResample(const std::vector<double>& v, size_t n) {
  if (v.empty() || n == 0) throw DataError("resample: empty input or target");
  if (n == v.size()) return v;
  std::vector<double> out(n);
  if (n == 1 || v.size() == 1) {
    for (double& o : out) o = v[0];
    return out;
  }
  const double scale = static_cast<double>(v.size() - 1) / static_cast<double>(n - 1);
  for (size_t i = 0; i < n; ++i) {
    const double pos = static_cast<double>(i) * scale;
    const size_t lo = std::min(static_cast<size_t>(pos), v.size() - 2);
    const double f = pos - static_cast<double>(lo);
    out[i] = v[lo] * (1.0 - f) + v[lo + 1] * f;
  }
  return out;
}

double F0Pcc(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw DataError("F0 PCC: need at least 2 voiced frames per contour (got " +
                    std::to_string(a.size()) + " and " + std::to_string(b.size()) + ")");
  }
  const size_t n = std::min(a.size(), b.size());
  const std::vector<double> x = LinearResample(a, n), y = LinearResample(b, n);
  const auto [mx, sx] = MeanStd(x);
  const auto [my, sy] = MeanStd(y);
  if (!(sx > 0.0) || !(sy > 0.0)) throw DataError("F0 PCC: constant contour, correlation undefined");
  double c = 0.0;
  for (size_t i = 0; i < n; ++i) c += (x[i] - mx) * (y[i] - my);
  const double r = c / (static_cast<double>(n) * sx * sy);
  return std::clamp(r, -1.0, 1.0);
}

double F0Pcc(const dsp::PitchTrack& a, const dsp::PitchTrack& b) {
  return F0Pcc(VoicedValues(a), VoicedValues(b));
}

double F0Dtw(const std::vector<double>& a_raw, const std::vector<double>& b_raw) {
  if (a_raw.empty() || b_raw.empty()) throw DataError("F0 DTW: empty contour");
  const std::vector<double> a = Standardize(a_raw), b = Standardize(b_raw);
  const size_t n = a.size(), m = b.size();
  struct Cell {
    double cost;
    int64_t len;
  };
  auto better = [](const Cell& x, const Cell& y) {
    return x.cost < y.cost || (x.cost == y.cost && x.len < y.len);
  };
  const Cell inf{std::numeric_limits<double>::infinity(), 0};
  std::vector<Cell> prev(m, inf), cur(m, inf);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < m; ++j) {
      Cell best = inf;
      if (i == 0 && j == 0) {
        best = {0.0, 0};
      } else {
        if (i > 0 && better(prev[j], best)) best = prev[j];
        if (j > 0 && better(cur[j - 1], best)) best = cur[j - 1];
        if (i > 0 && j > 0 && better(prev[j - 1], best)) best = prev[j - 1];
      }
      cur[j] = {best.cost + std::fabs(a[i] - b[j]), best.len + 1};
    }
    std::swap(prev, cur);
  }
  const Cell end = prev[m - 1];
  return end.cost / static_cast<double>(end.len);
}

double F0Dtw(const dsp::PitchTrack& a, const dsp::PitchTrack& b) {
  return F0Dtw(VoicedValues(a), VoicedValues(b));
}

double DurationRmse(const std::vector<int>& pred, const std::vector<int>& ref) {
  if (pred.size() != ref.size()) {
    throw DataError("duration RMSE: " + std::to_string(pred.size()) + " vs " +
                    std::to_string(ref.size()) + " phonemes (different text has no duration RMSE)");
  }
  if (pred.empty()) throw DataError("duration RMSE: empty sequences");
  double s = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(ref[i]);
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(pred.size()));
}

Embedder GlobalStyleEmbedder(const model::Model& m) {
  return [&m](const Tensor& mel) {
    NoGradGuard guard;
    const Tensor e = m.GlobalStyle(Constant(mel)).value();
    return std::vector<double>(e.values().begin(), e.values().end());
  };
}

double CosineSimilarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("cosine: embedding sizes differ");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw NumericError("cosine: zero embedding");
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

double EmbedSimilarity(const Tensor& a, const Tensor& b, const Embedder& embed) {
  return CosineSimilarity(embed(a), embed(b));
}

double TemplateAccuracy(const corpus::ToyOracle& oracle, const Tensor& mel,
                        const std::vector<int>& phonemes, const std::vector<int>& durations,
                        int language) {
  if (phonemes.size() != durations.size()) throw ShapeError("template accuracy: length mismatch");
  int64_t total = 0;
  for (int d : durations) total += d;
  if (total != mel.dim(0) || total == 0) {
    throw ShapeError("template accuracy: durations cover " + std::to_string(total) +
                     " frames, mel has " + std::to_string(mel.dim(0)));
  }
  int64_t hit = 0, t = 0;
  for (size_t i = 0; i < phonemes.size(); ++i) {
    for (int k = 0; k < durations[i]; ++k, ++t) {
      hit += oracle.ClassifyFrame(mel.data() + t * mel.dim(1), language) == phonemes[i] ? 1 : 0;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

std::string FormatMetricRow(const MetricRow& r) {
  std::ostringstream s;
  s.precision(10);
  s << r.id << ',' << r.metric << ',' << r.value;
  return s.str();
}

void WriteMetricsCsv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f << kMetricsCsvHeader << '\n';
  for (const MetricRow& r : rows) f << FormatMetricRow(r) << '\n';
  if (!f) throw DataError("write failed for " + path);
}

}  // namespace sftts::tasks
