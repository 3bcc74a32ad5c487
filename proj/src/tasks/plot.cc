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

#include "sftts/tasks/plot.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include "sftts/common/error.h"

namespace sftts::tasks {
namespace {

// A dark-to-bright ramp (black, purple, orange, pale yellow).
void Ramp(double t, uint8_t* rgb) {
  static const double anchors[4][3] = {{0, 0, 4}, {120, 28, 109}, {237, 105, 37}, {252, 255, 164}};
  t = std::clamp(t, 0.0, 1.0) * 3.0;
  const int i = std::min(static_cast<int>(t), 2);
  const double f = t - i;
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<uint8_t>(std::lround(anchors[i][c] * (1 - f) + anchors[i + 1][c] * f));
  }
}

const uint8_t kPalette[6][3] = {{31, 119, 180}, {214, 39, 40}, {44, 160, 44},
                                {148, 103, 189}, {255, 127, 14}, {23, 190, 207}};

void Line(Image& img, int x0, int y0, int x1, int y1, const uint8_t* c) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    img.Set(x0, y0, c[0], c[1], c[2]);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

void Image::Set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  uint8_t* p = &rgb[(static_cast<size_t>(y) * width + x) * 3];
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

void WritePng(const std::string& path, const Image& img) {
  if (img.width <= 0 || img.height <= 0) throw DataError("png: empty image");
  std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!f) throw DataError("png: cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("png: libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("png: write failed for " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(&img.rgb[static_cast<size_t>(y) * img.width * 3]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image RenderMel(const Tensor& mel, int scale) {
  if (mel.rank() != 2 || mel.size() == 0) throw ShapeError("render mel: need a non-empty matrix");
  const int64_t t = mel.dim(0), bands = mel.dim(1);
  const auto [lo_it, hi_it] = std::minmax_element(mel.values().begin(), mel.values().end());
  const double lo = *lo_it, span = std::max(1e-9, static_cast<double>(*hi_it) - lo);
  Image img;
  img.width = static_cast<int>(t * scale);
  img.height = static_cast<int>(bands * scale);
  img.rgb.assign(static_cast<size_t>(img.width) * img.height * 3, 0);
  for (int64_t i = 0; i < t; ++i) {
    for (int64_t k = 0; k < bands; ++k) {
      uint8_t c[3];
      Ramp((mel.at(i, k) - lo) / span, c);
      const int y0 = static_cast<int>((bands - 1 - k) * scale);
      for (int dy = 0; dy < scale; ++dy) {
        for (int dx = 0; dx < scale; ++dx) {
          img.Set(static_cast<int>(i * scale + dx), y0 + dy, c[0], c[1], c[2]);
        }
      }
    }
  }
  return img;
}

Image RenderContours(const std::vector<std::vector<double>>& contours, int width, int height) {
  Image img;
  img.width = width;
  img.height = height;
  img.rgb.assign(static_cast<size_t>(width) * height * 3, 255);
  size_t longest = 0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto valid = [](double v) { return std::isfinite(v); };
  for (const auto& c : contours) {
    longest = std::max(longest, c.size());
    for (double v : c) {
      if (!valid(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (longest < 2 || !std::isfinite(lo)) return img;
  if (hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  const int pad = 8;
  auto px = [&](size_t i) {
    return pad + static_cast<int>(std::lround(static_cast<double>(i) * (width - 2 * pad - 1) /
                                              static_cast<double>(longest - 1)));
  };
  auto py = [&](double v) {
    return height - 1 - pad -
           static_cast<int>(std::lround((v - lo) / (hi - lo) * (height - 2 * pad - 1)));
  };
  for (size_t c = 0; c < contours.size(); ++c) {
    const uint8_t* colour = kPalette[c % 6];
    const auto& v = contours[c];
    for (size_t i = 0; i + 1 < v.size(); ++i) {
      if (valid(v[i]) && valid(v[i + 1])) Line(img, px(i), py(v[i]), px(i + 1), py(v[i + 1]), colour);
    }
  }
  return img;
}

}  // namespace sftts::tasks
