// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/codec.hpp"

#include <gtest/gtest.h>

#include <random>

#include "latent_edit/png.hpp"
#include "test_util.hpp"

namespace latent_edit {
namespace {

using testing::code_of;

Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

TEST(Base64, KnownVectors) {
  const std::pair<const char*, const char*> cases[] = {
      {"", ""},         {"f", "Zg=="},         {"fo", "Zm8="},        {"foo", "Zm9v"},
      {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"},
  };
  for (const auto& [plain, encoded] : cases) {
    EXPECT_EQ(base64_encode(bytes_of(plain)), encoded);
    EXPECT_EQ(base64_decode(encoded), bytes_of(plain));
  }
}

TEST(Base64, RandomRoundTrip) {
  std::mt19937 rng(3);
  for (std::size_t n = 0; n < 300; n += 7) {
    Bytes b(n);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(base64_decode(base64_encode(b)), b);
  }
}

TEST(Base64, RejectsMalformed) {
  for (const char* bad : {"Zg=", "Z", "Zm9v!", "@@@@"}) {
    EXPECT_EQ(code_of([&] { base64_decode(bad); }), ErrorCode::DecodeError) << bad;
  }
}

TEST(Fingerprinter, StableAndSensitive) {
  const auto a = Fingerprinter().update("abc").update_u64(1).hex();
  EXPECT_EQ(a.size(), 32U);
  EXPECT_EQ(a, Fingerprinter().update("abc").update_u64(1).hex());
  EXPECT_NE(a, Fingerprinter().update("abc").update_u64(2).hex());
  EXPECT_NE(a, Fingerprinter().update("abd").update_u64(1).hex());
  EXPECT_NE(Fingerprinter().update("ab").update("c").hex(), Fingerprinter().update("a").update("bc").hex());
}

TEST(Png, GrayRoundTrip) {
  GrayImage img{7, 3, {}};
  for (std::size_t i = 0; i < 21; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 12));
  const Bytes png = encode_png_gray(img);
  EXPECT_TRUE(looks_like_png(png));
  const auto back = decode_png_gray(png);
  EXPECT_EQ(back.width, 7U);
  EXPECT_EQ(back.height, 3U);
  EXPECT_EQ(back.pixels, img.pixels);
}

TEST(Png, Errors) {
  EXPECT_FALSE(looks_like_png(bytes_of("GIF89a")));
  EXPECT_EQ(code_of([] { decode_png_gray(bytes_of("not a png at all")); }), ErrorCode::DecodeError);
  GrayImage bad{4, 4, Bytes(3)};
  EXPECT_EQ(code_of([&] { encode_png_gray(bad); }), ErrorCode::InvalidArgument);
}

TEST(ErrorCodes, ExitCodeMapping) {
  EXPECT_EQ(exit_code_for(ErrorCode::Usage), ExitCode::Usage);
  EXPECT_EQ(exit_code_for(ErrorCode::KTooLarge), ExitCode::Usage);
  EXPECT_EQ(exit_code_for(ErrorCode::DivergentNormalization), ExitCode::Divergence);
  EXPECT_EQ(exit_code_for(ErrorCode::CapabilityMissing), ExitCode::Backend);
  EXPECT_EQ(exit_code_for(ErrorCode::BadMagic), ExitCode::IoFormat);
  EXPECT_EQ(exit_code_for(ErrorCode::DuplicateId), ExitCode::IoFormat);
  EXPECT_EQ(error_code_name(ErrorCode::ZeroNormQuery), "ZeroNormQuery");
}

}  // namespace
}  // namespace latent_edit
