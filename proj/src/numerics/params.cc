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

#include "sftts/numerics/params.h"

#include <cmath>

namespace sftts {

Var ParamStore::Add(const std::string& name, Tensor init, const std::string& group) {
  if (index_.count(name)) throw UsageError("params: duplicate parameter '" + name + "'");
  Var v(std::move(init), true);
  index_[name] = entries_.size();
  entries_.push_back({name, group, v});
  return v;
}

const Var& ParamStore::Get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("params: no parameter '" + name + "'");
  return entries_[it->second].var;
}

int64_t ParamStore::CountScalars() const {
  int64_t n = 0;
  for (const auto& e : entries_) n += e.var.size();
  return n;
}

int64_t ParamStore::CountScalars(const std::string& group) const {
  int64_t n = 0;
  for (const auto& e : entries_)
    if (e.group == group) n += e.var.size();
  return n;
}

void ParamStore::ZeroGrad() {
  for (auto& e : entries_) e.var.ZeroGrad();
}

void ParamStore::ZeroGrad(const std::string& group) {
  for (auto& e : entries_)
    if (e.group == group) e.var.ZeroGrad();
}

void ParamStore::SetRequiresGrad(const std::string& group, bool on) {
  for (auto& e : entries_)
    if (e.group == group) e.var.set_requires_grad(on);
}

Tensor NormalTensor(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<float>(rng.Normal() * stddev);
  return t;
}

Tensor UniformTensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<float>(rng.Uniform(-bound, bound));
  return t;
}

Tensor XavierTensor(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return UniformTensor(std::move(shape), bound, rng);
}

}  // namespace sftts
