// Copyright 2026 The guiprobe Authors.
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

// Lossless raster I/O (PNG, binary PPM) and the byte-level helpers that ride
// along with it: base64 for prompt payloads and SHA-256 for run manifests.

#ifndef GUIPROBE_IMAGE_IO_H_
#define GUIPROBE_IMAGE_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guiprobe/core.h"

namespace guiprobe {

// Decodes PNG or binary PPM (P6, maxval 255), chosen by file signature.
// Throws ImageError naming the file on any failure.
Screen read_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Screen& screen);

std::vector<std::uint8_t> encode_png(const Screen& screen);
Screen decode_png(std::span<const std::uint8_t> bytes);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::span<const std::uint8_t> bytes);
  void update(std::string_view text);
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string sha256_hex(std::string_view text);

}  // namespace guiprobe

#endif  // GUIPROBE_IMAGE_IO_H_
