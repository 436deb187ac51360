// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/style_mapper.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "latent_edit/synthetic_backend.hpp"
#include "test_util.hpp"

namespace latent_edit {
namespace {

using testing::code_of;

ChannelDirectionMatrix identity_channels(std::size_t c) {
  ChannelDirectionMatrix m;
  m.rows = EmbeddingMatrix(c, c);
  for (std::size_t i = 0; i < c; ++i) m.rows.row(i)[i] = 1.0F;
  return m;
}

TEST(MapDirection, ThresholdAndAbsMaxNormalization) {
  const auto ch = identity_channels(3);
  const std::vector<float> dt{0.05F, -0.2F, 0.15F};
  const auto d = map_direction(ch, dt, 0.1);
  EXPECT_EQ(d.delta_s[0], 0.0);
  EXPECT_EQ(d.delta_s[1], -1.0);
  EXPECT_NEAR(d.delta_s[2], 0.75, 1e-7);
  EXPECT_EQ(d.support, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(d.beta, 0.1);

  const auto all = map_direction(ch, dt, 0.0);
  EXPECT_NEAR(all.delta_s[0], 0.25, 1e-7);
  EXPECT_EQ(all.support.size(), 3U);
}

TEST(MapDirection, DivergesWhenBetaExceedsEveryDot) {
  const auto ch = identity_channels(3);
  const std::vector<float> dt{0.05F, -0.2F, 0.15F};
  try {
    map_direction(ch, dt, 0.5);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DivergentNormalization);
    EXPECT_EQ(e.exit_code(), ExitCode::Divergence);
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
}

TEST(MapDirection, ThresholdIsInclusive) {
  const auto ch = identity_channels(2);
  const std::vector<float> dt{0.5F, 0.25F};
  EXPECT_EQ(map_direction(ch, dt, 0.25).support.size(), 2U);
}

TEST(MapDirection, DegenerateChannelsNeverEnterSupport) {
  auto ch = identity_channels(3);
  ch.rows.row(1)[1] = 0.0F;
  ch.degenerate_channels = {1};
  const auto d = map_direction(ch, std::vector<float>{0.3F, 0.9F, -0.6F}, 0.0);
  EXPECT_EQ(d.support, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(d.delta_s[2], -1.0);
}

TEST(MapDirection, Errors) {
  const auto ch = identity_channels(3);
  const std::vector<float> dt{1, 0, 0};
  EXPECT_EQ(code_of([&] { map_direction(ch, dt, -0.1); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { map_direction(ch, dt, std::nan("")); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { map_direction(ch, std::vector<float>{1, 0}, 0.1); }), ErrorCode::DimensionMismatch);
}

TEST(MapDirection, PropertiesOverRandomDirections) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 0.5);
  ChannelDirectionMatrix ch;
  ch.rows = testing::random_matrix(24, 8, 1);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<float> dt(8);
    for (auto& v : dt) v = static_cast<float>(normal(rng));
    const double b1 = uni(rng);
    const double b2 = b1 + uni(rng);
    StyleEditDirection d1;
    try {
      d1 = map_direction(ch, dt, b1);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::DivergentNormalization);
      continue;
    }
    double max_abs = 0.0;
    for (double v : d1.delta_s) {
      EXPECT_LE(std::abs(v), 1.0);
      max_abs = std::max(max_abs, std::abs(v));
    }
    EXPECT_EQ(max_abs, 1.0);
    for (std::size_t c = 0; c < 24; ++c) {
      EXPECT_EQ(d1.delta_s[c] != 0.0, std::abs(d1.raw_dots[c]) >= b1);
    }

    std::vector<float> neg(dt);
    for (auto& v : neg) v = -v;
    const auto dn = map_direction(ch, neg, b1);
    for (std::size_t c = 0; c < 24; ++c) EXPECT_EQ(dn.delta_s[c], -d1.delta_s[c]);

    try {
      const auto d2 = map_direction(ch, dt, b2);
      EXPECT_TRUE(std::includes(d1.support.begin(), d1.support.end(), d2.support.begin(), d2.support.end()));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DivergentNormalization);
    }
  }
}

TEST(EditStyle, AddsScaledDirection) {
  StyleVector s{{0.5F, -1.0F, 2.0F}, {0}};
  StyleEditDirection d;
  d.delta_s = {0.0, -1.0, 0.75};
  for (double alpha : {2.0, 6.0}) {
    const auto e = edit_style(s, d, alpha);
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(e.values[c] - s.values[c], static_cast<float>(alpha * d.delta_s[c]));
    }
    EXPECT_EQ(e.layer_offsets, s.layer_offsets);
  }
  EXPECT_EQ(edit_style(s, d, 0.0), s);
  EXPECT_EQ(code_of([&] { edit_style(s, d, INFINITY); }), ErrorCode::InvalidArgument);
  d.delta_s.pop_back();
  EXPECT_EQ(code_of([&] { edit_style(s, d, 1.0); }), ErrorCode::DimensionMismatch);
}

TEST(EditStyle, RoundsOnceToStoragePrecision) {
  SyntheticBackend backend;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto source = backend.sample_styles(1, static_cast<std::uint64_t>(trial)).front();
    StyleEditDirection d;
    for (std::size_t c = 0; c < 8; ++c) d.delta_s.push_back(c % 3 == 0 ? 0.0 : uni(rng));
    for (double alpha : {2.0, 6.0, 0.37}) {
      const auto e = edit_style(source, d, alpha);
      for (std::size_t c = 0; c < 8; ++c) {
        const long double exact = static_cast<long double>(source.values[c]) +
                                  static_cast<long double>(alpha) * static_cast<long double>(d.delta_s[c]);
        EXPECT_TRUE(testing::is_nearest_float(e.values[c], exact));
        if (d.delta_s[c] == 0.0) {
          EXPECT_EQ(std::bit_cast<std::uint32_t>(e.values[c]), std::bit_cast<std::uint32_t>(source.values[c]));
        }
      }
    }
  }
}

TEST(EditStyle, LinearInAlpha) {
  SyntheticBackend backend;
  const auto source = backend.sample_styles(1, 5).front();
  StyleEditDirection d;
  d.delta_s = {1.0, 0.0, -0.5, 0.25, 0.0, 0.0, 0.125, -1.0};
  const auto a = edit_style(source, d, 2.0);
  const auto b = edit_style(source, d, 4.0);
  for (std::size_t c = 0; c < 8; ++c) {
    EXPECT_NEAR(b.values[c] - source.values[c], 2.0F * (a.values[c] - source.values[c]), 1e-5);
  }
}

TEST(ApplyEdit, ReportsObjectiveAndImage) {
  SyntheticBackend backend;
  const auto source = backend.sample_styles(1, 6).front();
  const auto styles = backend.sample_styles(50, 7);
  const auto ch = compute_channel_directions(backend, styles, compute_style_statistics(styles));
  EditTextDirection td;
  td.delta_t = backend.embed_text("smile");
  const auto dir = map_direction(ch, td.delta_t, 0.1);
  const auto r = apply_edit(source, dir, td, 6.0, backend, td.delta_t);
  EXPECT_EQ(backend.invert(std::span<const Bytes>(&r.edited_image, 1)).front(), r.edited_style);
  ASSERT_TRUE(r.objective.has_value());
  const auto before = backend.embed_image(backend.generate(std::span<const StyleVector>(&source, 1))).front();
  EXPECT_GT(*r.objective, cosine(before, td.delta_t));
  EXPECT_FALSE(apply_edit(source, dir, td, 6.0, backend).objective.has_value());

  StyleEditDirection empty;
  empty.delta_s.assign(8, 0.0);
  EXPECT_EQ(code_of([&] { apply_edit(source, empty, td, 1.0, backend); }), ErrorCode::DivergentNormalization);
}

TEST(InvertImage, CapabilityGated) {
  SyntheticBackendConfig cfg;
  cfg.capabilities = kAllCapabilities & ~static_cast<std::uint32_t>(Capability::Invert);
  SyntheticBackend backend(cfg);
  const auto img = backend.generate(backend.sample_styles(1, 1)).front();
  EXPECT_EQ(code_of([&] { invert_image(img, backend); }), ErrorCode::InversionUnsupported);
}

TEST(GridRange, ParseAndEnumerate) {
  const auto a = GridRange::parse("2.0:6.0:0.5");
  EXPECT_EQ(a.values().size(), 9U);
  EXPECT_EQ(a.values().back(), 6.0);
  const auto b = GridRange::parse("0.1:0.2:0.05");
  ASSERT_EQ(b.values().size(), 3U);
  EXPECT_EQ(b.values().back(), 0.2);
  EXPECT_EQ(GridRange::parse("1:1:1").values(), (std::vector<double>{1.0}));
}

TEST(GridRange, Errors) {
  for (const char* text : {"", "1:2", "a:2:1", "1:2:0", "3:2:1", "1:2:-1", "1:2:x"}) {
    EXPECT_EQ(code_of([&] { GridRange::parse(text); }), ErrorCode::Usage) << text;
  }
}

TEST(RunGrid, PicksArgmaxAlphaMajor) {
  const std::vector<double> alphas = GridRange{2.0, 6.0, 0.5}.values();
  const std::vector<double> betas = GridRange{0.1, 0.2, 0.05}.values();
  for (std::size_t workers : {1U, 4U}) {
    const auto r = run_grid(
        alphas, betas, [&](std::size_t a, std::size_t b) { return alphas[a] + 10.0 * betas[b]; }, workers);
    ASSERT_EQ(r.points.size(), 27U);
    EXPECT_EQ(r.points[1].alpha, 2.0);
    EXPECT_EQ(r.points[1].beta, betas[1]);
    EXPECT_EQ(r.best, 26U);
    EXPECT_EQ(r.best_point().alpha, 6.0);
    EXPECT_EQ(r.best_point().beta, 0.2);
  }
}

TEST(RunGrid, FailedCellsAreRecordedAndSkipped) {
  const std::vector<double> alphas{1, 2};
  const std::vector<double> betas{0.1, 0.5};
  const auto r = run_grid(alphas, betas, [](std::size_t a, std::size_t b) -> double {
    if (b == 1) throw Error(ErrorCode::DivergentNormalization, "beta too large");
    return static_cast<double>(a);
  });
  EXPECT_EQ(r.best, 2U);
  EXPECT_EQ(r.points[1].error, ErrorCode::DivergentNormalization);
  EXPECT_FALSE(r.points[1].objective.has_value());
  EXPECT_EQ(r.points[1].message, "beta too large");
}

TEST(RunGrid, AllFailedThrows) {
  const std::vector<double> v{1.0};
  EXPECT_EQ(code_of([&] {
              run_grid(v, v, [](std::size_t, std::size_t) -> double {
                throw Error(ErrorCode::DivergentNormalization, "x");
              });
            }),
            ErrorCode::AllCombinationsDiverged);
  EXPECT_EQ(code_of([&] { run_grid({}, v, [](std::size_t, std::size_t) { return 0.0; }); }), ErrorCode::Usage);
}

TEST(Sweep, EndToEndOnSyntheticBackend) {
  SyntheticBackend backend;
  const auto styles = backend.sample_styles(50, 8);
  const auto ch = compute_channel_directions(backend, styles, compute_style_statistics(styles));
  EditTextDirection td;
  td.delta_t = backend.embed_text("smile");
  const auto source = backend.sample_styles(1, 9).front();
  const auto r = sweep(ch, td, source, td.delta_t, GridRange{2.0, 6.0, 0.5}, GridRange{0.1, 0.2, 0.05},
                       backend, 4);
  ASSERT_EQ(r.points.size(), 27U);
  for (const auto& p : r.points) {
    if (p.objective) {
      EXPECT_GT(p.support_size, 0U);
      EXPECT_LE(*p.objective, r.best_point().objective.value());
    }
  }
  EXPECT_EQ(r.best_point().alpha, 6.0);

  EXPECT_EQ(code_of([&] {
              sweep(ch, td, source, td.delta_t, GridRange{1, 2, 1}, GridRange{50, 60, 10}, backend);
            }),
            ErrorCode::AllCombinationsDiverged);
}

TEST(Cosine, Basics) {
  EXPECT_NEAR(cosine(std::vector<float>{1, 0}, std::vector<float>{1, 1}), std::sqrt(0.5), 1e-12);
  EXPECT_EQ(cosine(std::vector<float>{0, 0}, std::vector<float>{1, 1}), 0.0);
  EXPECT_EQ(code_of([] { cosine(std::vector<float>{1}, std::vector<float>{1, 1}); }), ErrorCode::DimensionMismatch);
}

}  // namespace
}  // namespace latent_edit
