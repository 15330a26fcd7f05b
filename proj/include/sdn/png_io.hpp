// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdn/image.hpp"

namespace sdn {

// PNG encoders return the full file bytes (fixed zlib level and filter so the
// same raster always encodes to the same bytes).
std::vector<uint8_t> encode_png_rgb8(const ImageRGB& img);
std::vector<uint8_t> encode_png_gray16(const ImageU16& img);
std::vector<uint8_t> encode_png_mask(const BinaryMask& mask);  // 8-bit gray, {0,255}

ImageRGB decode_png_rgb8(const std::vector<uint8_t>& bytes);
ImageU16 decode_png_gray16(const std::vector<uint8_t>& bytes);
BinaryMask decode_png_mask(const std::vector<uint8_t>& bytes);

void write_file(const std::string& path, const std::vector<uint8_t>& bytes);
std::vector<uint8_t> read_file(const std::string& path);

}  // namespace sdn
