// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/render.hpp>

#include <json.hpp>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace cagewarp {

Image::Image(int width, int height, const Rgb& fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ValidationError("image size must be non-negative");
  data_.resize(3 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = static_cast<float>(fill.x());
    data_[i + 1] = static_cast<float>(fill.y());
    data_[i + 2] = static_cast<float>(fill.z());
  }
}

Rgb Image::at(int x, int y) const {
  const std::size_t n = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                             static_cast<std::size_t>(x));
  return {data_[n], data_[n + 1], data_[n + 2]};
}

void Image::set(int x, int y, const Rgb& c) {
  const std::size_t n = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                             static_cast<std::size_t>(x));
  data_[n] = static_cast<float>(c.x());
  data_[n + 1] = static_cast<float>(c.y());
  data_[n + 2] = static_cast<float>(c.z());
}

namespace {

void append_png(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void write_bytes(const std::string& bytes, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

std::string encode_png(const Image& image) {
  if (image.width() < 1 || image.height() < 1) {
    throw ValidationError("cannot encode an empty image");
  }
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png: cannot allocate writer");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png: cannot allocate info");
  }

  std::string out;
  const auto w = static_cast<std::size_t>(image.width());
  std::vector<png_byte> row(3 * w);
  const auto src = image.data();
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: encoding failed");
  }
  png_set_write_fn(png, &out, append_png, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_sRGB(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    const std::size_t base = 3 * w * static_cast<std::size_t>(y);
    for (std::size_t i = 0; i < 3 * w; ++i) {
      const float v = std::clamp(src[base + i], 0.0f, 1.0f);
      row[i] = static_cast<png_byte>(std::lround(std::isfinite(v) ? v * 255.0f : 0.0f));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  write_bytes(encode_png(image), path);
}

std::string encode_raw_f32(const Image& image) {
  nlohmann::json header;
  header["channels"] = 3;
  header["encoding"] = "f32le";
  header["height"] = image.height();
  header["width"] = image.width();
  std::string out = header.dump();
  out.push_back('\n');
  const auto data = image.data();
  const std::size_t offset = out.size();
  out.resize(offset + 4 * data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(data[i]);
    for (int b = 0; b < 4; ++b) {
      out[offset + 4 * i + static_cast<std::size_t>(b)] =
          static_cast<char>((bits >> (8 * b)) & 0xffu);
    }
  }
  return out;
}

Image decode_raw_f32(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw LoadError("header", "raw image has no header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("header", std::string("raw image header: ") + e.what());
  }
  if (header.value("encoding", "") != "f32le" || header.value("channels", 0) != 3) {
    throw LoadError("encoding", "raw image must be 3-channel f32le");
  }
  const int w = header.value("width", -1);
  const int h = header.value("height", -1);
  if (w < 1 || h < 1) throw LoadError("width", "raw image dimensions must be positive");
  Image img(w, h);
  auto data = img.data();
  if (bytes.size() - nl - 1 != 4 * data.size()) {
    throw LoadError("payload", "raw image payload length does not match its dimensions");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + nl + 1);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[4 * i + static_cast<std::size_t>(b)]) << (8 * b);
    data[i] = std::bit_cast<float>(bits);
  }
  return img;
}

void write_raw_f32(const Image& image, const std::filesystem::path& path) {
  write_bytes(encode_raw_f32(image), path);
}

}  // namespace cagewarp
