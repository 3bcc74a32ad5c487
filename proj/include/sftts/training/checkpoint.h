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

// Checkpoint container. Little-endian layout:
//
//   char[4]  "SFTC"
//   u32      version (1)
//   u64      config hash
//   i64      step
//   u32 n + bytes    config text
//   u32 n + bytes    rng state
//   u32      scalar count, then per scalar: u32 n + name bytes, i64 value
//   u32      tensor count, then the directory, per tensor:
//              u32 n + name bytes, u32 dtype (1 = f32), u32 rank,
//              u64 extents[rank], u64 byte offset into the payload
//   u64      payload size, payload bytes
//   u64      FNV-1a of the payload

#ifndef SFTTS_TRAINING_CHECKPOINT_H_
#define SFTTS_TRAINING_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sftts/numerics/params.h"

namespace sftts::training {

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  uint64_t config_hash = 0;
  std::string config_text;
  int64_t step = 0;
  std::string rng_state;
  std::map<std::string, int64_t> scalars;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* Find(const std::string& name) const;
  void Put(const std::string& name, Tensor t) { tensors.emplace_back(name, std::move(t)); }
};

// Writes through a temporary file and renames, so a crash never leaves a
// truncated checkpoint under `path`.
void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path);
// Throws DataError on a corrupt or truncated file or a version mismatch.
Checkpoint LoadCheckpoint(const std::string& path);
// Throws UsageError on a hash mismatch unless `force`.
void CheckConfigHash(const Checkpoint& ckpt, uint64_t expected, bool force);

// Every entry of the store as "param/<name>".
void ExportParams(const ParamStore& store, Checkpoint* ckpt);
// Copies "param/<name>" into every store entry; all must exist with the
// stored shape. Tensors the store does not know are ignored.
void ImportParams(const Checkpoint& ckpt, ParamStore& store);

}  // namespace sftts::training

#endif  // SFTTS_TRAINING_CHECKPOINT_H_
