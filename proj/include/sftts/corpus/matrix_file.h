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

// Flat binary array files. Layout (little endian):
//   bytes 0-3   magic "SFTM"
//   u32         format version (1)
//   u32         dtype code: 1 f32, 2 f64, 3 i32, 4 u8
//   u32         rank
//   u64[rank]   extents
//   payload     row-major elements

#ifndef SFTTS_CORPUS_MATRIX_FILE_H_
#define SFTTS_CORPUS_MATRIX_FILE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sftts/numerics/tensor.h"

namespace sftts::corpus {

inline constexpr uint32_t kMatrixFileVersion = 1;

enum class DType : uint32_t { kF32 = 1, kF64 = 2, kI32 = 3, kU8 = 4 };

struct RawArray {
  DType dtype = DType::kF32;
  Shape shape;
  std::vector<unsigned char> bytes;
};

void WriteArray(const std::string& path, const RawArray& a);
RawArray ReadArray(const std::string& path);

void WriteF32(const std::string& path, const Tensor& t);
Tensor ReadF32(const std::string& path);
void WriteI32(const std::string& path, const std::vector<int>& v, Shape shape);
std::vector<int> ReadI32(const std::string& path, Shape* shape = nullptr);
void WriteU8(const std::string& path, const std::vector<unsigned char>& v);
std::vector<unsigned char> ReadU8(const std::string& path);

}  // namespace sftts::corpus

#endif  // SFTTS_CORPUS_MATRIX_FILE_H_
