// SPDX-License-Identifier: Apache-2.0
#include "sdn/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>

namespace sdn {

namespace {

struct WriteCtx {
  std::vector<uint8_t>* out;
};

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* ctx = static_cast<WriteCtx*>(png_get_io_ptr(png));
  ctx->out->insert(ctx->out->end(), data, data + len);
}

void png_flush_cb(png_structp) {}

struct ReadCtx {
  const std::vector<uint8_t>* in;
  size_t pos = 0;
};

void png_read_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* ctx = static_cast<ReadCtx*>(png_get_io_ptr(png));
  if (ctx->pos + len > ctx->in->size()) png_error(png, "png: truncated stream");
  std::memcpy(data, ctx->in->data() + ctx->pos, len);
  ctx->pos += len;
}

std::vector<uint8_t> encode_common(int width, int height, int bit_depth, int color_type,
                                   const std::vector<const uint8_t*>& rows) {
  std::vector<uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: encode failed");
  }
  WriteCtx ctx{&out};
  png_set_write_fn(png, &ctx, png_write_cb, png_flush_cb);
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (const uint8_t* row : rows)
    png_write_row(png, const_cast<png_bytep>(static_cast<const png_byte*>(row)));
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return out;
}

struct Decoded {
  int width = 0, height = 0, bit_depth = 0, color_type = 0;
  std::vector<uint8_t> data;  // packed rows
};

Decoded decode_common(const std::vector<uint8_t>& bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: decode failed");
  }
  ReadCtx ctx{&bytes};
  png_set_read_fn(png, &ctx, png_read_cb);
  png_read_info(png, info);
  Decoded d;
  d.width = static_cast<int>(png_get_image_width(png, info));
  d.height = static_cast<int>(png_get_image_height(png, info));
  d.bit_depth = png_get_bit_depth(png, info);
  d.color_type = png_get_color_type(png, info);
  size_t rowbytes = png_get_rowbytes(png, info);
  d.data.resize(rowbytes * static_cast<size_t>(d.height));
  std::vector<png_bytep> rows(static_cast<size_t>(d.height));
  for (int y = 0; y < d.height; ++y) rows[static_cast<size_t>(y)] = d.data.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return d;
}

}  // namespace

std::vector<uint8_t> encode_png_rgb8(const ImageRGB& img) {
  std::vector<const uint8_t*> rows(static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y) rows[static_cast<size_t>(y)] = img.px(0, y);
  return encode_common(img.width, img.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

std::vector<uint8_t> encode_png_gray16(const ImageU16& img) {
  // PNG 16-bit samples are big-endian
  std::vector<uint8_t> be(static_cast<size_t>(img.width) * img.height * 2);
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    be[2 * i] = static_cast<uint8_t>(img.pixels[i] >> 8);
    be[2 * i + 1] = static_cast<uint8_t>(img.pixels[i] & 0xFF);
  }
  std::vector<const uint8_t*> rows(static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<size_t>(y)] = be.data() + static_cast<size_t>(y) * img.width * 2;
  return encode_common(img.width, img.height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

std::vector<uint8_t> encode_png_mask(const BinaryMask& mask) {
  std::vector<uint8_t> scaled(mask.values.size());
  for (size_t i = 0; i < mask.values.size(); ++i) {
    if (mask.values[i] > 1) throw ValidationError("mask is not binary");
    scaled[i] = mask.values[i] ? 255 : 0;
  }
  std::vector<const uint8_t*> rows(static_cast<size_t>(mask.height));
  for (int y = 0; y < mask.height; ++y)
    rows[static_cast<size_t>(y)] = scaled.data() + static_cast<size_t>(y) * mask.width;
  return encode_common(mask.width, mask.height, 8, PNG_COLOR_TYPE_GRAY, rows);
}

ImageRGB decode_png_rgb8(const std::vector<uint8_t>& bytes) {
  Decoded d = decode_common(bytes);
  if (d.bit_depth != 8 || d.color_type != PNG_COLOR_TYPE_RGB)
    throw IoError("png: expected 8-bit RGB");
  ImageRGB img(d.width, d.height);
  img.pixels = std::move(d.data);
  return img;
}

ImageU16 decode_png_gray16(const std::vector<uint8_t>& bytes) {
  Decoded d = decode_common(bytes);
  if (d.bit_depth != 16 || d.color_type != PNG_COLOR_TYPE_GRAY)
    throw IoError("png: expected 16-bit grayscale");
  ImageU16 img(d.width, d.height);
  for (size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = static_cast<uint16_t>((d.data[2 * i] << 8) | d.data[2 * i + 1]);
  return img;
}

BinaryMask decode_png_mask(const std::vector<uint8_t>& bytes) {
  Decoded d = decode_common(bytes);
  if (d.bit_depth != 8 || d.color_type != PNG_COLOR_TYPE_GRAY)
    throw IoError("png: expected 8-bit grayscale mask");
  BinaryMask m(d.width, d.height);
  for (size_t i = 0; i < m.values.size(); ++i) {
    if (d.data[i] != 0 && d.data[i] != 255) throw IoError("png: mask sample is not 0 or 255");
    m.values[i] = d.data[i] ? 1 : 0;
  }
  return m;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for write: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  in.seekg(0, std::ios::end);
  std::streamsize n = in.tellg();
  in.seekg(0);
  std::vector<uint8_t> bytes(static_cast<size_t>(n));
  in.read(reinterpret_cast<char*>(bytes.data()), n);
  if (!in) throw IoError("read failed: " + path);
  return bytes;
}

}  // namespace sdn
