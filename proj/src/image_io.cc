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

#include "guiprobe/image_io.h"

#include <openssl/evp.h>
#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "guiprobe/errors.h"

namespace guiprobe {
namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G',
                                           '\r', '\n', 0x1a, '\n'};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ImageError(fmt::format("cannot open image file {}", path.string()));
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Screen screen_from_rgb_bytes(int width, int height,
                             std::span<const std::uint8_t> rgb) {
  std::vector<Rgb> pixels(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = {rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]};
  }
  return Screen(width, height, std::move(pixels));
}

std::vector<std::uint8_t> rgb_bytes(const Screen& screen) {
  std::vector<std::uint8_t> out;
  out.reserve(screen.pixels().size() * 3);
  for (const Rgb& p : screen.pixels()) {
    out.push_back(p.r);
    out.push_back(p.g);
    out.push_back(p.b);
  }
  return out;
}

// Minimal P6 reader: "P6", width, height, maxval 255, one whitespace byte,
// then raw RGB. Comments are accepted in the header.
Screen decode_ppm(std::span<const std::uint8_t> bytes, const std::string& name) {
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos]) && v < 1000000) {
      v = v * 10 + (bytes[pos++] - '0');
      any = true;
    }
    if (!any) throw ImageError(fmt::format("malformed PPM header in {}", name));
    return v;
  };
  long w = read_int();
  long h = read_int();
  long maxval = read_int();
  if (maxval != 255) {
    throw ImageError(fmt::format("unsupported PPM maxval {} in {}", maxval, name));
  }
  ++pos;
  std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (pos > bytes.size() || bytes.size() - pos < need) {
    throw ImageError(fmt::format("truncated PPM data in {}", name));
  }
  return screen_from_rgb_bytes(static_cast<int>(w), static_cast<int>(h),
                               bytes.subspan(pos, need));
}

Screen decode_png_named(std::span<const std::uint8_t> bytes,
                        const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw ImageError(fmt::format("cannot decode PNG {}: {}", name, image.message));
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw ImageError(fmt::format("cannot decode PNG {}: {}", name, message));
  }
  return screen_from_rgb_bytes(static_cast<int>(image.width),
                               static_cast<int>(image.height), buffer);
}

}  // namespace

Screen read_image(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
    return decode_png_named(bytes, path.string());
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
    return decode_ppm(bytes, path.string());
  }
  throw ImageError(fmt::format("unrecognized image format: {}", path.string()));
}

std::vector<std::uint8_t> encode_png(const Screen& screen) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(screen.width());
  image.height = static_cast<png_uint_32>(screen.height());
  image.format = PNG_FORMAT_RGB;
  auto rgb = rgb_bytes(screen);

  // One pass into a worst-case buffer; sizing first would compress twice.
  png_alloc_size_t size = PNG_IMAGE_PNG_SIZE_MAX(image);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0,
                                 nullptr)) {
    throw ImageError(fmt::format("cannot encode PNG: {}", image.message));
  }
  out.resize(size);
  return out;
}

Screen decode_png(std::span<const std::uint8_t> bytes) {
  return decode_png_named(bytes, "<memory>");
}

void write_png(const std::filesystem::path& path, const Screen& screen) {
  auto bytes = encode_png(screen);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw ImageError(fmt::format("cannot write image file {}", path.string()));
  }
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  int n = EVP_DecodeBlock(out.data(),
                          reinterpret_cast<const unsigned char*>(text.data()),
                          static_cast<int>(text.size()));
  if (n < 0) throw Error("invalid base64 input");
  // EVP_DecodeBlock keeps the bytes that padding stands in for.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
  EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr);
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::update(std::span<const std::uint8_t> bytes) {
  EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), bytes.data(), bytes.size());
}

void Sha256::update(std::string_view text) {
  EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), text.data(), text.size());
}

std::string Sha256::hex_digest() {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), digest, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_hex(std::string_view text) {
  Sha256 h;
  h.update(text);
  return h.hex_digest();
}

}  // namespace guiprobe
