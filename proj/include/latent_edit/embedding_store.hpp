// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "latent_edit/embedding_file.hpp"

namespace latent_edit {

using EmbeddingVector = std::vector<float>;

enum class Polarity { MostSimilar, LeastSimilar };

struct ScoredId {
  std::string id;
  double score = 0.0;
  std::size_t row = 0;

  friend bool operator==(const ScoredId&, const ScoredId&) = default;
};

struct RetrievalPair {
  std::vector<ScoredId> most_similar;
  std::vector<ScoredId> least_similar;
};

struct CorpusMetadata {
  std::string backend;
  std::string created;
  std::string source_manifest;
  // Optional image locations keyed by id, used to serve thumbnails.
  std::unordered_map<std::string, std::string> image_paths;
};

/// Float64 dot product of two float32 vectors with a fixed 8-way summation
/// order, so results are identical on every platform and vector width.
double dot_f64(std::span<const float> a, std::span<const float> b) noexcept;
double norm_f64(std::span<const float> a) noexcept;

/// Immutable corpus of embeddings with exact cosine retrieval.
///
/// Rows are kept bit-exactly as stored. Cosine scores are computed as
/// dot_f64(row, query) / (|row| |query|) with cached row norms. A per-row int8
/// copy of the unit-normalized rows with rigorous error bounds prunes the scan;
/// only rows whose score interval can reach the top (or bottom) k are rescored
/// exactly, so the result is identical to a full float64 sort.
class CorpusIndex {
 public:
  static CorpusIndex from_rows(EmbeddingMatrix rows, std::vector<std::string> ids,
                               CorpusMetadata metadata = {});
  static CorpusIndex load(const std::filesystem::path& path);

  void save(const std::filesystem::path& path, Dtype dtype = Dtype::Float32) const;

  std::size_t size() const noexcept { return rows_.rows(); }
  std::size_t dim() const noexcept { return rows_.dim(); }
  std::span<const float> row(std::size_t i) const { return rows_.row(i); }
  const EmbeddingMatrix& rows() const noexcept { return rows_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  double row_norm(std::size_t i) const { return norms_[i]; }
  bool unit_normalized() const noexcept { return unit_normalized_; }
  const CorpusMetadata& metadata() const noexcept { return metadata_; }
  const std::string& fingerprint() const noexcept { return fingerprint_; }

  std::optional<std::size_t> find(const std::string& id) const;

  /// Exact top-k (descending) or bottom-k (ascending) by cosine similarity;
  /// equal scores are ordered by id.
  std::vector<ScoredId> retrieve(std::span<const float> query, std::size_t k,
                                 Polarity polarity) const;

  /// Both tails from a single pass over the corpus.
  RetrievalPair retrieve_extremes(std::span<const float> query, std::size_t k) const;

 private:
  CorpusIndex() = default;

  struct QuantizedQuery;
  QuantizedQuery quantize_query(std::span<const float> query) const;
  void scan_q8(const QuantizedQuery& qq, std::int32_t* out) const;
  std::vector<ScoredId> rescore(std::span<const float> query, double query_norm,
                                const std::vector<std::size_t>& candidates, std::size_t k,
                                Polarity polarity) const;

  EmbeddingMatrix rows_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<double> norms_;
  bool unit_normalized_ = false;
  CorpusMetadata metadata_;
  std::string fingerprint_;

  // Pruning data: q8_ holds round(u / scale) for unit row u.
  std::vector<std::int8_t> q8_;
  std::vector<double> q8_scale_;
  std::vector<double> q8_scaled_norm_;  // scale * |q8 row|
  std::vector<double> q8_residual_;     // |u - scale * q8 row|, rounded up
};

}  // namespace latent_edit
