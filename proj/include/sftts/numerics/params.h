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

#ifndef SFTTS_NUMERICS_PARAMS_H_
#define SFTTS_NUMERICS_PARAMS_H_

#include <map>
#include <string>
#include <vector>

#include "sftts/numerics/autograd.h"
#include "sftts/numerics/rng.h"

namespace sftts {

// Optimizer parameter groups.
inline constexpr const char* kGroupAcoustic = "acoustic";
inline constexpr const char* kGroupProsody = "prosody";
inline constexpr const char* kGroupDiscriminator = "discriminator";

struct ParamEntry {
  std::string name;
  std::string group;
  Var var;
};

// Named, ordered registry of trainable leaves. Names are unique; iteration
// order is creation order, which fixes checkpoint layout and optimizer order.
class ParamStore {
 public:
  Var Add(const std::string& name, Tensor init, const std::string& group);
  const Var& Get(const std::string& name) const;
  bool Contains(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<ParamEntry>& entries() const { return entries_; }
  int64_t CountScalars() const;
  int64_t CountScalars(const std::string& group) const;

  void ZeroGrad();
  void ZeroGrad(const std::string& group);
  void SetRequiresGrad(const std::string& group, bool on);

 private:
  std::vector<ParamEntry> entries_;
  std::map<std::string, size_t> index_;
};

// Initialisers.
Tensor NormalTensor(Shape shape, double stddev, Rng& rng);
Tensor UniformTensor(Shape shape, double bound, Rng& rng);
// Glorot-uniform with explicit fan sizes.
Tensor XavierTensor(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng);

}  // namespace sftts

#endif  // SFTTS_NUMERICS_PARAMS_H_
