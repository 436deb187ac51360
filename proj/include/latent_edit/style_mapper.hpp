// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latent_edit/backend.hpp"
#include "latent_edit/channel_directions.hpp"
#include "latent_edit/direction.hpp"
#include "latent_edit/error.hpp"

namespace latent_edit {

inline constexpr double kDefaultAlpha = 6.0;
inline constexpr double kDefaultBeta = 0.1;
inline constexpr std::size_t kDefaultRetrievalK = 100;

/// Sparse style-space edit. raw_dots[c] = channel_c . delta_t; entries whose
/// magnitude is below beta are zeroed and the rest are divided by the largest
/// retained magnitude.
struct StyleEditDirection {
  std::vector<double> delta_s;
  double beta = 0.0;
  std::vector<std::size_t> support;
  std::vector<double> raw_dots;
};

/// Throws DivergentNormalization when beta zeroes every channel.
StyleEditDirection map_direction(const ChannelDirectionMatrix& channels,
                                 std::span<const float> delta_t, double beta);

/// edited[c] = source[c] + float(alpha * delta_s[c]), in float arithmetic.
StyleVector edit_style(const StyleVector& source, const StyleEditDirection& direction, double alpha);

struct EditResult {
  Bytes edited_image;
  StyleVector edited_style;
  StyleEditDirection applied_direction;
  EditTextDirection text_direction;
  // cosine(embed_image(edited), embed_text(instruction)) when available.
  std::optional<double> objective;
};

/// Generates G(s + alpha delta_s). When `instruction_embedding` is given and
/// the backend embeds images, the objective is filled in.
EditResult apply_edit(const StyleVector& source, const StyleEditDirection& direction,
                      const EditTextDirection& text_direction, double alpha, Backend& backend,
                      const std::optional<EmbeddingVector>& instruction_embedding = std::nullopt);

StyleVector invert_image(const Bytes& image, Backend& backend);

/// Cosine between two embeddings in float64.
double cosine(std::span<const float> a, std::span<const float> b);

/// start:stop:step, inclusive of stop when reachable within 1e-9.
struct GridRange {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;

  static GridRange parse(std::string_view text);
  std::vector<double> values() const;
};

struct SweepPoint {
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> objective;
  std::optional<ErrorCode> error;
  std::string message;
  std::size_t support_size = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // alpha-major
  std::size_t best = 0;

  const SweepPoint& best_point() const { return points.at(best); }
};

/// Evaluates objective(alpha_index, beta_index) over the full grid, alpha-major.
/// An Error thrown by one point is recorded against it; the sweep continues.
/// Throws AllCombinationsDiverged when no point succeeds.
using GridObjective = std::function<double(std::size_t alpha_index, std::size_t beta_index)>;
SweepResult run_grid(std::span<const double> alphas, std::span<const double> betas,
                     const GridObjective& objective, std::size_t max_in_flight = 1);

/// Grid search maximizing cosine(embed(edited image), embed(instruction)).
SweepResult sweep(const ChannelDirectionMatrix& channels, const EditTextDirection& text_direction,
                  const StyleVector& source, const EmbeddingVector& instruction_embedding,
                  const GridRange& alpha_range, const GridRange& beta_range, Backend& backend,
                  std::size_t max_in_flight = 1);

}  // namespace latent_edit
