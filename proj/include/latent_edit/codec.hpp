// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace latent_edit {

using Bytes = std::vector<std::uint8_t>;

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws Error(DecodeError) on malformed input.
Bytes base64_decode(std::string_view text);

/// Incremental BLAKE2b hasher producing short hex fingerprints.
class Fingerprinter {
 public:
  Fingerprinter();
  Fingerprinter& update(std::span<const std::uint8_t> bytes);
  Fingerprinter& update(std::string_view text);
  Fingerprinter& update_u64(std::uint64_t value);
  std::string hex();

 private:
  alignas(64) unsigned char state_[384];
};

std::string iso8601_now();

}  // namespace latent_edit
