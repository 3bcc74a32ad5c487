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

#include "sftts/training/optim.h"

#include <algorithm>
#include <cmath>

#include "sftts/common/error.h"

namespace sftts::training {

void AdamW::Step(ParamStore& store, const std::string& group, double lr) {
  const int64_t t = ++steps_[group];
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t));
  const float b1 = static_cast<float>(opts_.beta1), b2 = static_cast<float>(opts_.beta2);
  for (const ParamEntry& e : store.entries()) {
    if (e.group != group || !e.var.has_grad()) continue;
    Var p = e.var;
    Tensor& value = p.mutable_value();
    const Tensor& g = p.grad();
    Moments& mo = moments_[e.name];
    if (mo.m.empty()) {
      mo.m = Tensor(value.shape());
      mo.v = Tensor(value.shape());
    }
    const bool decay = value.rank() >= 2 && opts_.weight_decay > 0.0;
    const float wd = static_cast<float>(lr * opts_.weight_decay);
    float* x = value.data();
    float* m = mo.m.data();
    float* v = mo.v.data();
    const float* gr = g.data();
    for (int64_t i = 0; i < value.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * gr[i];
      v[i] = b2 * v[i] + (1.0f - b2) * gr[i] * gr[i];
      const double mhat = m[i] / c1, vhat = v[i] / c2;
      if (decay) x[i] -= wd * x[i];
      x[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + opts_.eps));
    }
  }
}

double ClipGradNorm(ParamStore& store, const std::vector<std::string>& groups, double max_norm) {
  auto selected = [&](const ParamEntry& e) {
    return e.var.has_grad() && std::find(groups.begin(), groups.end(), e.group) != groups.end();
  };
  double sq = 0.0;
  for (const ParamEntry& e : store.entries()) {
    if (!selected(e)) continue;
    for (float g : e.var.grad().values()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("gradient norm is not finite");
  if (max_norm > 0.0 && norm > max_norm) {
    const float s = static_cast<float>(max_norm / norm);
    for (const ParamEntry& e : store.entries()) {
      if (!selected(e)) continue;
      Var v = e.var;
      for (float& g : v.mutable_grad().values()) g *= s;
    }
  }
  return norm;
}

}  // namespace sftts::training
