// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "latent_edit/codec.hpp"

namespace latent_edit {

struct GrayImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  Bytes pixels;
};

Bytes encode_png_gray(const GrayImage& image);

/// Decodes any PNG to 8-bit grayscale; throws Error(DecodeError).
GrayImage decode_png_gray(std::span<const std::uint8_t> png);

bool looks_like_png(std::span<const std::uint8_t> bytes) noexcept;

}  // namespace latent_edit
