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

#include "sftts/training/checkpoint.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "sftts/common/error.h"
#include "sftts/model/config.h"

namespace sftts::training {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoints are little-endian");

constexpr char kMagic[4] = {'S', 'F', 'T', 'C'};
constexpr uint32_t kDtypeF32 = 1;

uint64_t Fnv(const char* p, size_t n) {
  uint64_t h = 1469598103934665603ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(p[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void Pod(T v) {
    const char* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void Str(const std::string& s) {
    Pod<uint32_t>(static_cast<uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void Bytes(const void* p, size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  const std::string& buf() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& data, const std::string& path) : d_(data), path_(path) {}
  template <typename T>
  T Pod() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, d_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string Str() {
    const uint32_t n = Pod<uint32_t>();
    Need(n);
    std::string s = d_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  const char* Take(size_t n) {
    Need(n);
    const char* p = d_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  void Need(size_t n) const {
    if (pos_ + n > d_.size()) throw DataError("checkpoint " + path_ + ": truncated");
  }
  const std::string& d_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

const Tensor* Checkpoint::Find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void SaveCheckpoint(const Checkpoint& c, const std::string& path) {
  Writer w;
  w.Bytes(kMagic, 4);
  w.Pod<uint32_t>(kCheckpointVersion);
  w.Pod<uint64_t>(c.config_hash);
  w.Pod<int64_t>(c.step);
  w.Str(c.config_text);
  w.Str(c.rng_state);
  w.Pod<uint32_t>(static_cast<uint32_t>(c.scalars.size()));
  for (const auto& [k, v] : c.scalars) {
    w.Str(k);
    w.Pod<int64_t>(v);
  }
  w.Pod<uint32_t>(static_cast<uint32_t>(c.tensors.size()));
  uint64_t offset = 0;
  for (const auto& [name, t] : c.tensors) {
    w.Str(name);
    w.Pod<uint32_t>(kDtypeF32);
    w.Pod<uint32_t>(static_cast<uint32_t>(t.rank()));
    for (int64_t e : t.shape()) w.Pod<uint64_t>(static_cast<uint64_t>(e));
    w.Pod<uint64_t>(offset);
    offset += static_cast<uint64_t>(t.size()) * sizeof(float);
  }
  w.Pod<uint64_t>(offset);
  std::string payload;
  payload.reserve(offset);
  for (const auto& [name, t] : c.tensors) {
    payload.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float));
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("checkpoint: cannot write " + tmp);
    f.write(w.buf().data(), static_cast<std::streamsize>(w.buf().size()));
    f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    const uint64_t sum = Fnv(payload.data(), payload.size());
    f.write(reinterpret_cast<const char*>(&sum), sizeof sum);
    if (!f) throw DataError("checkpoint: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("checkpoint: cannot move " + tmp + " to " + path);
  }
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open " + path);
  const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(data, path);
  if (std::memcmp(r.Take(4), kMagic, 4) != 0) throw DataError("checkpoint " + path + ": bad magic");
  const uint32_t version = r.Pod<uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint " + path + ": version " + std::to_string(version) +
                    ", this build reads " + std::to_string(kCheckpointVersion));
  }
  Checkpoint c;
  c.config_hash = r.Pod<uint64_t>();
  c.step = r.Pod<int64_t>();
  c.config_text = r.Str();
  c.rng_state = r.Str();
  const uint32_t ns = r.Pod<uint32_t>();
  for (uint32_t i = 0; i < ns; ++i) {
    std::string k = r.Str();
    c.scalars[k] = r.Pod<int64_t>();
  }
  struct Dir {
    std::string name;
    Shape shape;
    uint64_t offset;
  };
  std::vector<Dir> dir;
  const uint32_t nt = r.Pod<uint32_t>();
  for (uint32_t i = 0; i < nt; ++i) {
    Dir d;
    d.name = r.Str();
    if (r.Pod<uint32_t>() != kDtypeF32) throw DataError("checkpoint " + path + ": unknown dtype");
    const uint32_t rank = r.Pod<uint32_t>();
    if (rank > 8) throw DataError("checkpoint " + path + ": implausible rank");
    for (uint32_t k = 0; k < rank; ++k) d.shape.push_back(static_cast<int64_t>(r.Pod<uint64_t>()));
    d.offset = r.Pod<uint64_t>();
    dir.push_back(std::move(d));
  }
  const uint64_t size = r.Pod<uint64_t>();
  const char* payload = r.Take(size);
  if (r.Pod<uint64_t>() != Fnv(payload, size)) {
    throw DataError("checkpoint " + path + ": payload checksum mismatch");
  }
  for (const Dir& d : dir) {
    const uint64_t bytes = static_cast<uint64_t>(NumElements(d.shape)) * sizeof(float);
    if (d.offset + bytes > size) throw DataError("checkpoint " + path + ": tensor out of bounds");
    Tensor t(d.shape);
    std::memcpy(t.data(), payload + d.offset, bytes);
    c.tensors.emplace_back(d.name, std::move(t));
  }
  return c;
}

void CheckConfigHash(const Checkpoint& c, uint64_t expected, bool force) {
  if (c.config_hash == expected || force) return;
  throw UsageError("checkpoint config hash " + model::HexHash(c.config_hash) +
                   " does not match the run configuration " + model::HexHash(expected) +
                   " (use --force to override)");
}

void ExportParams(const ParamStore& store, Checkpoint* c) {
  for (const ParamEntry& e : store.entries()) c->Put("param/" + e.name, e.var.value());
}

void ImportParams(const Checkpoint& c, ParamStore& store) {
  for (const ParamEntry& e : store.entries()) {
    const Tensor* t = c.Find("param/" + e.name);
    if (t == nullptr) throw DataError("checkpoint: missing parameter " + e.name);
    if (t->shape() != e.var.shape()) {
      throw DataError("checkpoint: parameter " + e.name + " has shape " + ShapeString(t->shape()) +
                      ", model expects " + ShapeString(e.var.shape()));
    }
    Var v = e.var;
    v.mutable_value() = *t;
  }
}

}  // namespace sftts::training
