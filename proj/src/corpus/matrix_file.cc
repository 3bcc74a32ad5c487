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

#include "sftts/corpus/matrix_file.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sftts/common/error.h"

namespace sftts::corpus {
namespace {

// The on-disk format is little endian; so is every platform we build for.
static_assert(std::endian::native == std::endian::little);

size_t ElementSize(DType d) {
  switch (d) {
    case DType::kF32: return 4;
    case DType::kF64: return 8;
    case DType::kI32: return 4;
    case DType::kU8: return 1;
  }
  throw DataError("matrix file: unknown dtype code");
}

template <typename V>
void Put(std::string& s, V v) {
  s.append(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V Take(const std::string& s, size_t& pos, const std::string& path) {
  if (pos + sizeof(V) > s.size()) throw DataError("matrix file: truncated header in " + path);
  V v;
  std::memcpy(&v, s.data() + pos, sizeof(V));
  pos += sizeof(V);
  return v;
}

RawArray Expect(RawArray a, DType d, const std::string& path) {
  if (a.dtype != d) throw DataError("matrix file: unexpected dtype in " + path);
  return a;
}

}  // namespace

void WriteArray(const std::string& path, const RawArray& a) {
  if (a.bytes.size() != static_cast<size_t>(NumElements(a.shape)) * ElementSize(a.dtype)) {
    throw DataError("matrix file: payload does not match shape for " + path);
  }
  std::string out("SFTM");
  Put<uint32_t>(out, kMatrixFileVersion);
  Put<uint32_t>(out, static_cast<uint32_t>(a.dtype));
  Put<uint32_t>(out, static_cast<uint32_t>(a.shape.size()));
  for (int64_t e : a.shape) Put<uint64_t>(out, static_cast<uint64_t>(e));
  out.append(reinterpret_cast<const char*>(a.bytes.data()), a.bytes.size());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("matrix file: cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("matrix file: write failed for " + path);
}

RawArray ReadArray(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("matrix file: cannot open " + path);
  const std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (s.size() < 4 || s.compare(0, 4, "SFTM") != 0) {
    throw DataError("matrix file: bad magic in " + path);
  }
  size_t pos = 4;
  const auto version = Take<uint32_t>(s, pos, path);
  if (version != kMatrixFileVersion) {
    throw DataError("matrix file: unsupported version " + std::to_string(version) + " in " + path);
  }
  RawArray a;
  a.dtype = static_cast<DType>(Take<uint32_t>(s, pos, path));
  const size_t esize = ElementSize(a.dtype);
  const auto rank = Take<uint32_t>(s, pos, path);
  if (rank > 8) throw DataError("matrix file: implausible rank in " + path);
  for (uint32_t i = 0; i < rank; ++i) a.shape.push_back(static_cast<int64_t>(Take<uint64_t>(s, pos, path)));
  const size_t payload = static_cast<size_t>(NumElements(a.shape)) * esize;
  if (s.size() - pos != payload) throw DataError("matrix file: payload size mismatch in " + path);
  a.bytes.assign(s.begin() + static_cast<std::ptrdiff_t>(pos), s.end());
  return a;
}

void WriteF32(const std::string& path, const Tensor& t) {
  RawArray a{DType::kF32, t.shape(), {}};
  a.bytes.resize(static_cast<size_t>(t.size()) * 4);
  if (t.size() > 0) std::memcpy(a.bytes.data(), t.data(), a.bytes.size());
  WriteArray(path, a);
}

Tensor ReadF32(const std::string& path) {
  const RawArray a = Expect(ReadArray(path), DType::kF32, path);
  Tensor t(a.shape);
  if (t.size() > 0) std::memcpy(t.data(), a.bytes.data(), a.bytes.size());
  return t;
}

void WriteI32(const std::string& path, const std::vector<int>& v, Shape shape) {
  static_assert(sizeof(int) == 4);
  RawArray a{DType::kI32, std::move(shape), {}};
  a.bytes.resize(v.size() * 4);
  if (!v.empty()) std::memcpy(a.bytes.data(), v.data(), a.bytes.size());
  WriteArray(path, a);
}

std::vector<int> ReadI32(const std::string& path, Shape* shape) {
  const RawArray a = Expect(ReadArray(path), DType::kI32, path);
  std::vector<int> v(a.bytes.size() / 4);
  if (!v.empty()) std::memcpy(v.data(), a.bytes.data(), a.bytes.size());
  if (shape) *shape = a.shape;
  return v;
}

void WriteU8(const std::string& path, const std::vector<unsigned char>& v) {
  WriteArray(path, RawArray{DType::kU8, Shape{static_cast<int64_t>(v.size())}, v});
}

std::vector<unsigned char> ReadU8(const std::string& path) {
  return Expect(ReadArray(path), DType::kU8, path).bytes;
}

}  // namespace sftts::corpus
