// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "latent_edit/backend.hpp"
#include "latent_edit/embedding_file.hpp"

namespace latent_edit {

struct StyleStatistics {
  std::vector<double> sigma;  // population standard deviation per channel
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
};

/// Throws TooFewSamples for fewer than two styles.
StyleStatistics compute_style_statistics(std::span<const StyleVector> styles,
                                         std::uint64_t seed = 0);

/// Row c is the embedding-space displacement caused by moving style channel c.
struct ChannelDirectionMatrix {
  EmbeddingMatrix rows;
  double sigma_multiplier = 5.0;
  std::size_t sample_count = 0;
  std::string backend_fingerprint;
  bool normalized_embeddings = true;
  std::vector<std::size_t> degenerate_channels;  // sigma_c == 0, row is exactly zero

  std::size_t channels() const noexcept { return rows.rows(); }
  std::size_t dim() const noexcept { return rows.dim(); }
  bool is_degenerate(std::size_t channel) const;
  std::string fingerprint() const;
};

struct ChannelDirectionOptions {
  double multiplier = 5.0;
  // Unit-normalize each image embedding before differencing.
  bool normalize_embeddings = true;
  std::size_t max_in_flight = 1;
  // When set, finished channels are appended here and skipped on a rerun with
  // identical inputs.
  std::filesystem::path checkpoint;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// For each channel c and sample i, generates G(s_i + m sigma_c e_c) and
/// G(s_i - m sigma_c e_c), embeds both and averages the differences. Each
/// channel is one generate + one embed_image call over the 2n perturbed styles
/// (sample-major, plus before minus). Channels may run concurrently; the
/// assembled matrix does not depend on completion order.
ChannelDirectionMatrix compute_channel_directions(Backend& backend,
                                                  std::span<const StyleVector> styles,
                                                  const StyleStatistics& stats,
                                                  const ChannelDirectionOptions& options = {});

void save_channel_directions(const ChannelDirectionMatrix& matrix, const std::filesystem::path& path);
/// Throws WrongArtifactKind when the manifest is not a channel-direction file.
ChannelDirectionMatrix load_channel_directions(const std::filesystem::path& path);

/// Returns true on match. On mismatch throws FingerprintMismatch when strict,
/// otherwise returns false so the caller can warn.
bool check_backend_fingerprint(const ChannelDirectionMatrix& matrix,
                               const BackendDescriptor& descriptor, bool strict);

/// Style sample files: EMBD container with `kind: styles`.
void save_styles(std::span<const StyleVector> styles, const std::filesystem::path& path,
                 const std::string& backend_fingerprint = {});
std::vector<StyleVector> load_styles(const std::filesystem::path& path);

}  // namespace latent_edit
