// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/style_mapper.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <sstream>
#include <thread>

namespace latent_edit {
namespace {

constexpr double kRangeEpsilon = 1e-9;

std::string format_beta(double beta) {
  std::ostringstream os;
  os << beta;
  return os.str();
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::Usage, "'" + std::string(text) + "' is not a number");
  }
  return v;
}

}  // namespace

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "cosine of unequal dimensions");
  const double na = norm_f64(a);
  const double nb = norm_f64(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot_f64(a, b) / (na * nb);
}

StyleEditDirection map_direction(const ChannelDirectionMatrix& channels,
                                 std::span<const float> delta_t, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::InvalidArgument, "beta must be a finite non-negative number");
  }
  if (delta_t.size() != channels.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "edit direction has dimension " +
                                                  std::to_string(delta_t.size()) +
                                                  ", channel directions have " +
                                                  std::to_string(channels.dim()));
  }
  const std::size_t c = channels.channels();
  StyleEditDirection out;
  out.beta = beta;
  out.raw_dots.resize(c);
  out.delta_s.assign(c, 0.0);
  double max_abs = 0.0;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double dot = dot_f64(channels.rows.row(ch), delta_t);
    out.raw_dots[ch] = dot;
    if (channels.is_degenerate(ch) || dot == 0.0 || std::abs(dot) < beta) continue;
    out.delta_s[ch] = dot;
    max_abs = std::max(max_abs, std::abs(dot));
  }
  if (max_abs == 0.0) {
    throw Error(ErrorCode::DivergentNormalization,
                "beta = " + format_beta(beta) +
                    " zeroes every channel; normalization diverges (lower beta)");
  }
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (out.delta_s[ch] == 0.0) continue;
    out.delta_s[ch] /= max_abs;
    out.support.push_back(ch);
  }
  return out;
}

StyleVector edit_style(const StyleVector& source, const StyleEditDirection& direction, double alpha) {
  if (!std::isfinite(alpha)) throw Error(ErrorCode::InvalidArgument, "alpha must be finite");
  if (source.size() != direction.delta_s.size()) {
    throw Error(ErrorCode::DimensionMismatch, "style has " + std::to_string(source.size()) +
                                                  " channels, edit has " +
                                                  std::to_string(direction.delta_s.size()));
  }
  StyleVector edited = source;
  for (std::size_t ch = 0; ch < edited.values.size(); ++ch) {
    // One rounding to storage precision; channels outside the support are untouched.
    if (direction.delta_s[ch] == 0.0) continue;
    edited.values[ch] =
        static_cast<float>(static_cast<double>(source.values[ch]) + alpha * direction.delta_s[ch]);
  }
  return edited;
}

EditResult apply_edit(const StyleVector& source, const StyleEditDirection& direction,
                      const EditTextDirection& text_direction, double alpha, Backend& backend,
                      const std::optional<EmbeddingVector>& instruction_embedding) {
  if (direction.support.empty()) {
    throw Error(ErrorCode::DivergentNormalization, "cannot apply a divergent (all-zero) edit");
  }
  EditResult result;
  result.edited_style = edit_style(source, direction, alpha);
  auto images = backend.generate(std::span<const StyleVector>(&result.edited_style, 1));
  if (images.size() != 1) throw Error(ErrorCode::BackendFailure, "generate returned no image");
  result.edited_image = std::move(images.front());
  result.applied_direction = direction;
  result.text_direction = text_direction;
  if (instruction_embedding && backend.describe().has(Capability::EmbedImage)) {
    const auto emb = backend.embed_image(std::span<const Bytes>(&result.edited_image, 1));
    if (emb.size() != 1) throw Error(ErrorCode::BackendFailure, "embed_image returned no embedding");
    result.objective = cosine(emb.front(), *instruction_embedding);
  }
  return result;
}

StyleVector invert_image(const Bytes& image, Backend& backend) {
  const BackendDescriptor desc = backend.describe();
  desc.require(Capability::Invert);
  auto styles = backend.invert(std::span<const Bytes>(&image, 1));
  if (styles.size() != 1) throw Error(ErrorCode::BackendFailure, "invert returned no style");
  if (styles.front().size() != desc.style_dim) {
    throw Error(ErrorCode::DimensionMismatch, "inverted style has " +
                                                  std::to_string(styles.front().size()) +
                                                  " channels, backend reports " +
                                                  std::to_string(desc.style_dim));
  }
  return std::move(styles.front());
}

GridRange GridRange::parse(std::string_view text) {
  const auto first = text.find(':');
  const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
  if (first == std::string_view::npos || second == std::string_view::npos) {
    throw Error(ErrorCode::Usage, "range '" + std::string(text) + "' must be start:stop:step");
  }
  GridRange r{parse_double(text.substr(0, first)),
              parse_double(text.substr(first + 1, second - first - 1)),
              parse_double(text.substr(second + 1))};
  if (r.values().empty()) throw Error(ErrorCode::Usage, "range '" + std::string(text) + "' is empty");
  return r;
}

std::vector<double> GridRange::values() const {
  std::vector<double> out;
  if (!(step > 0.0) || !std::isfinite(start) || !std::isfinite(stop) || stop + kRangeEpsilon < start) {
    return out;
  }
  for (std::size_t i = 0;; ++i) {
    double v = start + static_cast<double>(i) * step;
    if (v > stop + kRangeEpsilon) break;
    if (std::abs(v - stop) <= kRangeEpsilon) v = stop;
    out.push_back(v);
  }
  return out;
}

SweepResult run_grid(std::span<const double> alphas, std::span<const double> betas,
                     const GridObjective& objective, std::size_t max_in_flight) {
  if (alphas.empty() || betas.empty()) throw Error(ErrorCode::Usage, "sweep grid is empty");
  SweepResult result;
  result.points.resize(alphas.size() * betas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    for (std::size_t b = 0; b < betas.size(); ++b) {
      auto& p = result.points[a * betas.size() + b];
      p.alpha = alphas[a];
      p.beta = betas[b];
    }
  }

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t idx = next.fetch_add(1); idx < result.points.size(); idx = next.fetch_add(1)) {
      auto& p = result.points[idx];
      try {
        p.objective = objective(idx / betas.size(), idx % betas.size());
      } catch (const Error& e) {
        p.error = e.code();
        p.message = e.what();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(max_in_flight, 1, result.points.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }

  bool found = false;
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const auto& p = result.points[i];
    if (!p.objective) continue;
    if (!found || *p.objective > *result.points[result.best].objective) {
      result.best = i;
      found = true;
    }
  }
  if (!found) {
    throw Error(ErrorCode::AllCombinationsDiverged,
                "every (alpha, beta) combination failed; the smallest beta was " +
                    format_beta(*std::min_element(betas.begin(), betas.end())));
  }
  return result;
}

SweepResult sweep(const ChannelDirectionMatrix& channels, const EditTextDirection& text_direction,
                  const StyleVector& source, const EmbeddingVector& instruction_embedding,
                  const GridRange& alpha_range, const GridRange& beta_range, Backend& backend,
                  std::size_t max_in_flight) {
  const auto alphas = alpha_range.values();
  const auto betas = beta_range.values();
  if (alphas.empty() || betas.empty()) throw Error(ErrorCode::Usage, "sweep grid is empty");
  backend.describe().require(Capability::EmbedImage);

  // The direction depends only on beta; map once per column.
  std::vector<std::optional<StyleEditDirection>> directions(betas.size());
  std::vector<std::optional<Error>> failures(betas.size());
  for (std::size_t b = 0; b < betas.size(); ++b) {
    try {
      directions[b] = map_direction(channels, text_direction.delta_t, betas[b]);
    } catch (const Error& e) {
      failures[b] = e;
    }
  }

  auto result = run_grid(
      alphas, betas,
      [&](std::size_t a, std::size_t b) {
        if (failures[b]) throw *failures[b];
        const auto edit = apply_edit(source, *directions[b], text_direction, alphas[a], backend,
                                     instruction_embedding);
        return *edit.objective;
      },
      max_in_flight);
  for (auto& p : result.points) {
    for (std::size_t b = 0; b < betas.size(); ++b) {
      if (p.beta == betas[b] && directions[b]) p.support_size = directions[b]->support.size();
    }
  }
  return result;
}

}  // namespace latent_edit
