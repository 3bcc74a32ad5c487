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

#include "sftts/dsp/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sftts/common/error.h"

namespace sftts::dsp {
namespace {

uint32_t ReadLe32(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}
uint16_t ReadLe16(const unsigned char* p) { return uint16_t(p[0] | p[1] << 8); }

void PutLe32(std::string& s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutLe16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

Wav ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("wav: cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* b = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(b, "RIFF", 4) != 0 || std::memcmp(b + 8, "WAVE", 4) != 0) {
    throw DataError("wav: " + path + " is not a RIFF/WAVE file");
  }
  Wav wav;
  bool have_fmt = false;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint32_t len = ReadLe32(b + pos + 4);
    const unsigned char* body = b + pos + 8;
    if (pos + 8 + len > bytes.size()) throw DataError("wav: truncated chunk in " + path);
    if (std::memcmp(b + pos, "fmt ", 4) == 0) {
      if (len < 16) throw DataError("wav: short fmt chunk in " + path);
      const uint16_t format = ReadLe16(body), channels = ReadLe16(body + 2);
      const uint16_t bits = ReadLe16(body + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw DataError("wav: " + path + " must be 16-bit PCM mono");
      }
      wav.sample_rate = static_cast<int>(ReadLe32(body + 4));
      have_fmt = true;
    } else if (std::memcmp(b + pos, "data", 4) == 0) {
      if (!have_fmt) throw DataError("wav: data before fmt in " + path);
      wav.samples.resize(len / 2);
      for (size_t i = 0; i < wav.samples.size(); ++i) {
        wav.samples[i] = static_cast<int16_t>(ReadLe16(body + 2 * i)) / 32768.0f;
      }
      return wav;
    }
    pos += 8 + len + (len & 1);
  }
  throw DataError("wav: no data chunk in " + path);
}

void WriteWav(const std::string& path, std::span<const float> samples, int sample_rate) {
  std::string out;
  const auto data_bytes = static_cast<uint32_t>(samples.size() * 2);
  out.append("RIFF");
  PutLe32(out, 36 + data_bytes);
  out.append("WAVEfmt ");
  PutLe32(out, 16);
  PutLe16(out, 1);
  PutLe16(out, 1);
  PutLe32(out, static_cast<uint32_t>(sample_rate));
  PutLe32(out, static_cast<uint32_t>(sample_rate * 2));
  PutLe16(out, 2);
  PutLe16(out, 16);
  out.append("data");
  PutLe32(out, data_bytes);
  for (float s : samples) {
    const long q = std::lround(std::clamp(s, -1.0f, 1.0f) * 32767.0f);
    PutLe16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("wav: cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace sftts::dsp
