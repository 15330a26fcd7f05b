// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "sdn/util.hpp"

namespace sdn {

// Row-major interleaved 8-bit RGB image.
struct ImageRGB {
  int width = 0, height = 0;
  std::vector<uint8_t> pixels;  // size = width*height*3

  ImageRGB() = default;
  ImageRGB(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3, 0) {}
  uint8_t* px(int x, int y) { return &pixels[(static_cast<size_t>(y) * width + x) * 3]; }
  const uint8_t* px(int x, int y) const {
    return &pixels[(static_cast<size_t>(y) * width + x) * 3];
  }
};

// Row-major 16-bit single-channel image (instance ids).
struct ImageU16 {
  int width = 0, height = 0;
  std::vector<uint16_t> pixels;

  ImageU16() = default;
  ImageU16(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h, 0) {}
  uint16_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  uint16_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

// Binary per-pixel mask; values are strictly 0 or 1.
struct BinaryMask {
  int width = 0, height = 0;
  std::vector<uint8_t> values;

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), values(static_cast<size_t>(w) * h, 0) {}
  uint8_t& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  int64_t count_ones() const {
    int64_t n = 0;
    for (uint8_t v : values) n += v;
    return n;
  }
  void check_binary() const {
    for (uint8_t v : values)
      if (v > 1) throw ValidationError("mask contains non-binary value");
  }
};

}  // namespace sdn
