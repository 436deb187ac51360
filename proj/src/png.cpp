// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/png.hpp"

#include <png.h>

#include <array>
#include <cstring>

#include "latent_edit/error.hpp"

namespace latent_edit {

Bytes encode_png_gray(const GrayImage& image) {
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw Error(ErrorCode::InvalidArgument, "pixel buffer does not match image size");
  }
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  desc.width = image.width;
  desc.height = image.height;
  desc.format = PNG_FORMAT_GRAY;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::BackendFailure, std::string("PNG encode failed: ") + desc.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::BackendFailure, std::string("PNG encode failed: ") + desc.message);
  }
  out.resize(size);
  return out;
}

GrayImage decode_png_gray(std::span<const std::uint8_t> png) {
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, png.data(), png.size())) {
    throw Error(ErrorCode::DecodeError, std::string("not a readable PNG: ") + desc.message);
  }
  desc.format = PNG_FORMAT_GRAY;
  GrayImage image;
  image.width = desc.width;
  image.height = desc.height;
  image.pixels.resize(PNG_IMAGE_SIZE(desc));
  if (!png_image_finish_read(&desc, nullptr, image.pixels.data(), 0, nullptr)) {
    png_image_free(&desc);
    throw Error(ErrorCode::DecodeError, std::string("PNG decode failed: ") + desc.message);
  }
  return image;
}

bool looks_like_png(std::span<const std::uint8_t> bytes) noexcept {
  static constexpr std::array<std::uint8_t, 8> kSig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  return bytes.size() >= kSig.size() && std::memcmp(bytes.data(), kSig.data(), kSig.size()) == 0;
}

}  // namespace latent_edit
