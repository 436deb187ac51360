// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/codec.hpp"

#include <sodium.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>

#include "latent_edit/error.hpp"

namespace latent_edit {
namespace {

void ensure_sodium() {
  static const int status = sodium_init();
  if (status < 0) throw Error(ErrorCode::IoFailure, "libsodium initialization failed");
}

crypto_generichash_state* as_state(unsigned char* raw) {
  static_assert(sizeof(crypto_generichash_state) <= 384);
  return reinterpret_cast<crypto_generichash_state*>(raw);
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  ensure_sodium();
  const std::size_t len =
      sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(len, '\0');
  sodium_bin2base64(out.data(), len, bytes.data(), bytes.size(),
                    sodium_base64_VARIANT_ORIGINAL);
  out.resize(len - 1);  // drop terminator
  return out;
}

Bytes base64_decode(std::string_view text) {
  ensure_sodium();
  Bytes out(text.size() / 4 * 3 + 3);
  std::size_t written = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \r\n",
                        &written, &end, sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size()) {
    throw Error(ErrorCode::DecodeError, "malformed base64 payload");
  }
  out.resize(written);
  return out;
}

Fingerprinter::Fingerprinter() {
  ensure_sodium();
  crypto_generichash_init(as_state(state_), nullptr, 0, 16);
}

Fingerprinter& Fingerprinter::update(std::span<const std::uint8_t> bytes) {
  crypto_generichash_update(as_state(state_), bytes.data(), bytes.size());
  return *this;
}

Fingerprinter& Fingerprinter::update(std::string_view text) {
  update_u64(text.size());
  crypto_generichash_update(as_state(state_),
                            reinterpret_cast<const unsigned char*>(text.data()),
                            text.size());
  return *this;
}

Fingerprinter& Fingerprinter::update_u64(std::uint64_t value) {
  std::array<std::uint8_t, 8> le{};
  for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(value >> (8 * i));
  return update(le);
}

std::string Fingerprinter::hex() {
  std::array<unsigned char, 16> digest{};
  crypto_generichash_final(as_state(state_), digest.data(), digest.size());
  std::string out(digest.size() * 2 + 1, '\0');
  sodium_bin2hex(out.data(), out.size(), digest.data(), digest.size());
  out.pop_back();
  return out;
}

std::string iso8601_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf.data();
}

}  // namespace latent_edit
