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

#ifndef LWSNET_IMAGE_IO_HPP_
#define LWSNET_IMAGE_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace lwsnet {

/// 8-bit interleaved raster with 1 (gray) or 3 (RGB) channels.
struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;
};

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads .png (via libpng) or binary .pgm (P5). PGM with maxval > 255 is
/// rescaled to 8 bits.
Image8 read_image(const std::filesystem::path& path);

/// Writes a single-channel image; format chosen by extension (.png / .pgm).
void write_gray_image(const std::filesystem::path& path, std::size_t width, std::size_t height,
                      std::span<const std::uint8_t> pixels);

}  // namespace lwsnet

#endif  // LWSNET_IMAGE_IO_HPP_
