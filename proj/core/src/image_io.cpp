// Copyright 2026 The LWSNet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lwsnet/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <string>

namespace lwsnet {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

Image8 read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw ImageIoError(path.string() + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image8 out;
  out.width = image.width;
  out.height = image.height;
  out.channels = color ? 3 : 1;
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw ImageIoError(path.string() + ": " + msg);
  }
  return out;
}

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> pixels) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    throw ImageIoError(path.string() + ": " + image.message);
  }
}

// Skips whitespace and '#' comments between PNM header tokens.
std::size_t read_pnm_int(std::istream& in, const std::filesystem::path& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) throw ImageIoError(path.string() + ": malformed PGM header");
  std::size_t v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + static_cast<std::size_t>(c - '0');
    c = in.get();
  }
  // Exactly one whitespace byte separates the header from the data.
  return v;
}

Image8 read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') throw ImageIoError(path.string() + ": not a binary PGM (P5)");
  Image8 out;
  out.width = read_pnm_int(in, path);
  out.height = read_pnm_int(in, path);
  const std::size_t maxval = read_pnm_int(in, path);
  if (out.width == 0 || out.height == 0 || maxval == 0 || maxval > 65535) {
    throw ImageIoError(path.string() + ": invalid PGM dimensions or maxval");
  }
  const std::size_t n = out.width * out.height;
  out.pixels.resize(n);
  if (maxval < 256) {
    std::vector<char> raw(n);
    in.read(raw.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw ImageIoError(path.string() + ": truncated PGM");
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<unsigned char>(raw[i]);
      out.pixels[i] = static_cast<std::uint8_t>(maxval == 255 ? v : (v * 255 + maxval / 2) / maxval);
    }
  } else {
    std::vector<char> raw(2 * n);
    in.read(raw.data(), static_cast<std::streamsize>(2 * n));
    if (static_cast<std::size_t>(in.gcount()) != 2 * n) throw ImageIoError(path.string() + ": truncated PGM");
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t v = (static_cast<unsigned char>(raw[2 * i]) << 8) |
                            static_cast<unsigned char>(raw[2 * i + 1]);
      out.pixels[i] = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> pixels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageIoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw ImageIoError("failed writing " + path.string());
}

}  // namespace

Image8 read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ImageIoError("no such file: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw ImageIoError(path.string() + ": unsupported image format (expected .png or .pgm)");
}

void write_gray_image(const std::filesystem::path& path, std::size_t width, std::size_t height,
                      std::span<const std::uint8_t> pixels) {
  if (pixels.size() != width * height) throw ImageIoError("pixel buffer size mismatch for " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".png") return write_png(path, width, height, pixels);
  if (ext == ".pgm") return write_pgm(path, width, height, pixels);
  throw ImageIoError(path.string() + ": unsupported image format (expected .png or .pgm)");
}

}  // namespace lwsnet
