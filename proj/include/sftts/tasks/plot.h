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

// PNG rendering of mels and contours. The raw data is always written next
// to the picture by the callers; these are for eyeballing only.

#ifndef SFTTS_TASKS_PLOT_H_
#define SFTTS_TASKS_PLOT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sftts/numerics/tensor.h"

namespace sftts::tasks {

struct Image {
  int width = 0, height = 0;
  std::vector<uint8_t> rgb;  // row-major, top row first
  void Set(int x, int y, uint8_t r, uint8_t g, uint8_t b);
};

void WritePng(const std::string& path, const Image& img);

// Time runs left to right, low bands at the bottom; `scale` pixels per cell.
Image RenderMel(const Tensor& mel, int scale = 3);

// One polyline per contour over a shared axis; NaN values are gaps
// (unvoiced frames).
Image RenderContours(const std::vector<std::vector<double>>& contours, int width = 640,
                     int height = 240);

}  // namespace sftts::tasks

#endif  // SFTTS_TASKS_PLOT_H_
