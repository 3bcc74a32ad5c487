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

#ifndef SFTTS_DSP_WAV_H_
#define SFTTS_DSP_WAV_H_

#include <span>
#include <string>
#include <vector>

namespace sftts::dsp {

// 16-bit PCM mono RIFF. Samples are floats in [-1, 1]; writing clips.
struct Wav {
  int sample_rate = 0;
  std::vector<float> samples;
};

Wav ReadWav(const std::string& path);
void WriteWav(const std::string& path, std::span<const float> samples, int sample_rate);

}  // namespace sftts::dsp

#endif  // SFTTS_DSP_WAV_H_
