// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "latent_edit/backend.hpp"

namespace latent_edit {

/// Deterministic in-process stand-in for the text/image embedders, the
/// generator and the inverter.
///
/// Generation is linear in the sense that embed_image(generate(s)) == A s,
/// where A (embed_dim x style_dim) is mostly a scaled permutation: channel c
/// drives embedding axis channel_axis(c), plus seeded Gaussian mixing noise.
/// Images losslessly carry the float32 style bits, so invert(generate(s)) == s.
struct SyntheticBackendConfig {
  std::uint64_t seed = 7;
  std::size_t embed_dim = 16;
  std::size_t style_dim = 8;
  std::size_t channels_per_layer = 4;
  // Row-major embed_dim x style_dim; generated from the seed when empty.
  std::vector<double> mixing;
  double mixing_noise = 0.05;
  // token -> embedding axis; the default lexicon is used when empty.
  std::map<std::string, std::size_t> lexicon;
  double unknown_token_scale = 0.3;
  bool normalize_embeddings = true;
  std::uint32_t capabilities = kAllCapabilities;
  std::size_t max_batch = 0;
};

class SyntheticBackend final : public Backend {
 public:
  explicit SyntheticBackend(SyntheticBackendConfig config = {});

  BackendDescriptor describe() override { return descriptor_; }
  std::vector<EmbeddingVector> embed_text(std::span<const std::string> texts) override;
  std::vector<EmbeddingVector> embed_image(std::span<const Bytes> images) override;
  std::vector<Bytes> generate(std::span<const StyleVector> styles) override;
  std::vector<StyleVector> invert(std::span<const Bytes> images) override;
  std::vector<StyleVector> sample_styles(std::size_t count, std::uint64_t seed) override;
  using Backend::embed_text;

  const SyntheticBackendConfig& config() const noexcept { return config_; }
  double mixing(std::size_t row, std::size_t channel) const {
    return config_.mixing[row * config_.style_dim + channel];
  }
  /// Embedding axis that channel c dominates.
  std::size_t channel_axis(std::size_t channel) const { return channel_axes_.at(channel); }
  /// Channel that dominates the given axis, if any.
  std::optional<std::size_t> channel_for_axis(std::size_t axis) const;
  std::optional<std::size_t> axis_for_token(const std::string& token) const;

  /// A s in float64, before rounding and normalization.
  std::vector<double> embed_style(const StyleVector& style) const;

  Bytes encode_style(const StyleVector& style) const;
  StyleVector decode_style(std::span<const std::uint8_t> image) const;

  static std::vector<std::string> tokenize(const std::string& text);

 private:
  EmbeddingVector finish_embedding(const std::vector<double>& v) const;

  SyntheticBackendConfig config_;
  std::vector<std::size_t> channel_axes_;
  std::vector<std::size_t> layer_offsets_;
  BackendDescriptor descriptor_;
};

std::vector<std::string> default_synthetic_lexicon_tokens();

}  // namespace latent_edit
