// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#if defined(__AVX512VNNI__) && defined(__AVX512BW__)
#include <immintrin.h>
#define LATENT_EDIT_VNNI 1
#endif

#include "latent_edit/codec.hpp"
#include "latent_edit/error.hpp"

namespace latent_edit {
namespace {

// Covers float64 rounding in both the bound arithmetic and the exact rescore.
constexpr double kBoundSlack = 1e-9;
constexpr double kUnitTolerance = 1e-5;

// Quantizes a unit vector to integers in [-levels, levels] with scale
// max|u|/levels and returns (scale, |u - scale*q|) with the norm rounded up.
template <typename T>
std::pair<double, double> quantize_unit(std::span<const double> unit, double levels, T* out) {
  double max_abs = 0.0;
  for (double v : unit) max_abs = std::max(max_abs, std::abs(v));
  const double scale = max_abs / levels;
  double residual2 = 0.0;
  for (std::size_t j = 0; j < unit.size(); ++j) {
    const double q = std::clamp(std::nearbyint(unit[j] / scale), -levels, levels);
    out[j] = static_cast<T>(q);
    const double e = unit[j] - scale * q;
    residual2 += e * e;
  }
  return {scale, std::sqrt(residual2) * (1.0 + 1e-9) + 1e-12};
}

// Rows use int8. The query uses up to 14-bit levels so its rounding error is
// negligible, capped so that 127 * levels * d cannot overflow int32.
constexpr double kRowLevels = 127.0;

double query_levels(std::size_t d) {
  const double cap = std::floor(2147483647.0 / (kRowLevels * static_cast<double>(d)));
  return std::min(16383.0, cap);
}

#ifndef LATENT_EDIT_VNNI
std::int32_t dot_i8_i16(const std::int8_t* a, const std::int16_t* b, std::size_t n) noexcept {
  std::int32_t acc = 0;
  for (std::size_t j = 0; j < n; ++j) {
    acc += static_cast<std::int32_t>(a[j]) * static_cast<std::int32_t>(b[j]);
  }
  return acc;
}
#endif

// Keeps the k best values seen under Better; top() is the k-th best.
template <typename Better>
class BoundedHeap {
 public:
  explicit BoundedHeap(std::size_t k) : k_(k) { heap_.reserve(k); }
  void push(double v) {
    if (heap_.size() < k_) {
      heap_.push_back(v);
      std::push_heap(heap_.begin(), heap_.end(), Better{});
    } else if (Better{}(v, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), Better{});
      heap_.back() = v;
      std::push_heap(heap_.begin(), heap_.end(), Better{});
    }
  }
  double kth() const { return heap_.front(); }

 private:
  std::size_t k_;
  std::vector<double> heap_;
};

bool ranks_before(const ScoredId& a, const ScoredId& b, Polarity polarity) {
  if (a.score != b.score) {
    return polarity == Polarity::MostSimilar ? a.score > b.score : a.score < b.score;
  }
  return a.id < b.id;
}

}  // namespace

double dot_f64(std::span<const float> a, std::span<const float> b) noexcept {
  const std::size_t n = std::min(a.size(), b.size());
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    for (std::size_t u = 0; u < 8; ++u) {
      acc[u] += static_cast<double>(a[j + u]) * static_cast<double>(b[j + u]);
    }
  }
  for (std::size_t u = 0; j < n; ++j, ++u) {
    acc[u] += static_cast<double>(a[j]) * static_cast<double>(b[j]);
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

double norm_f64(std::span<const float> a) noexcept { return std::sqrt(dot_f64(a, a)); }

struct CorpusIndex::QuantizedQuery {
  std::vector<std::int16_t> q16;
  double scale = 0.0;
  double residual = 0.0;
  double norm = 0.0;
};

CorpusIndex CorpusIndex::from_rows(EmbeddingMatrix rows, std::vector<std::string> ids,
                                   CorpusMetadata metadata) {
  const std::size_t n = rows.rows();
  const std::size_t d = rows.dim();
  if (n == 0) throw Error(ErrorCode::EmptyIndex, "a corpus index needs at least one row");
  if (ids.size() != n) {
    throw Error(ErrorCode::ManifestMismatch, std::to_string(ids.size()) + " ids for " +
                                                 std::to_string(n) + " rows");
  }

  CorpusIndex index;
  index.by_id_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!index.by_id_.emplace(ids[i], i).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate id '" + ids[i] + "'");
    }
  }

  index.norms_.resize(n);
  index.q8_.resize(n * d);
  index.q8_scale_.resize(n);
  index.q8_scaled_norm_.resize(n);
  index.q8_residual_.resize(n);
  std::vector<double> unit(d);
  bool all_unit = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = rows.row(i);
    for (float v : r) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFinite, "row '" + ids[i] + "' has a non-finite entry");
      }
    }
    const double norm = norm_f64(r);
    if (norm == 0.0) throw Error(ErrorCode::ZeroNormRow, "row '" + ids[i] + "' has zero norm");
    index.norms_[i] = norm;
    all_unit = all_unit && std::abs(norm - 1.0) <= kUnitTolerance;

    for (std::size_t j = 0; j < d; ++j) unit[j] = static_cast<double>(r[j]) / norm;
    std::int8_t* q = index.q8_.data() + i * d;
    const auto [scale, residual] = quantize_unit(std::span<const double>(unit), kRowLevels, q);
    index.q8_scale_[i] = scale;
    index.q8_residual_[i] = residual;
    double q2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) q2 += static_cast<double>(q[j]) * q[j];
    index.q8_scaled_norm_[i] = scale * std::sqrt(q2) * (1.0 + 1e-12);
  }
  index.unit_normalized_ = all_unit;

  Fingerprinter fp;
  fp.update_u64(d).update_u64(n);
  for (const auto& id : ids) fp.update(id);
  const auto& values = rows.values();
  fp.update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(values.data()),
                                          values.size() * sizeof(float)));
  index.fingerprint_ = fp.hex();

  index.rows_ = std::move(rows);
  index.ids_ = std::move(ids);
  index.metadata_ = std::move(metadata);
  return index;
}

CorpusIndex CorpusIndex::load(const std::filesystem::path& path) {
  EmbeddingFile file = read_embedding_file(path);
  CorpusMetadata meta;
  meta.backend = file.manifest.value("backend", std::string());
  meta.created = file.manifest.value("created", std::string());
  meta.source_manifest = file.manifest.value("source_manifest", std::string());
  if (file.manifest.contains("image_paths") && file.manifest["image_paths"].is_object()) {
    for (const auto& [id, p] : file.manifest["image_paths"].items()) {
      meta.image_paths.emplace(id, p.get<std::string>());
    }
  }
  const bool claimed_unit = file.manifest.value("unit_normalized", false);
  auto index = from_rows(std::move(file.matrix), std::move(file.ids), std::move(meta));
  if (claimed_unit && !index.unit_normalized()) {
    throw Error(ErrorCode::ManifestMismatch,
                path.string() + " is flagged unit_normalized but has non-unit rows");
  }
  return index;
}

void CorpusIndex::save(const std::filesystem::path& path, Dtype dtype) const {
  Json manifest = {
      {"kind", "corpus"},
      {"backend", metadata_.backend},
      {"source_manifest", metadata_.source_manifest},
      {"unit_normalized", unit_normalized_},
  };
  if (!metadata_.created.empty()) manifest["created"] = metadata_.created;
  if (!metadata_.image_paths.empty()) {
    Json paths = Json::object();
    for (const auto& [id, p] : metadata_.image_paths) paths[id] = p;
    manifest["image_paths"] = std::move(paths);
  }
  write_embedding_file(path, rows_, ids_, std::move(manifest), dtype);
}

std::optional<std::size_t> CorpusIndex::find(const std::string& id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

CorpusIndex::QuantizedQuery CorpusIndex::quantize_query(std::span<const float> query) const {
  if (query.size() != dim()) {
    throw Error(ErrorCode::DimensionMismatch, "query has dimension " + std::to_string(query.size()) +
                                                  ", corpus has " + std::to_string(dim()));
  }
  for (float v : query) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "query has a non-finite entry");
  }
  QuantizedQuery qq;
  qq.norm = norm_f64(query);
  if (qq.norm == 0.0) throw Error(ErrorCode::ZeroNormQuery, "query vector has zero norm");
  std::vector<double> unit(query.size());
  for (std::size_t j = 0; j < query.size(); ++j) unit[j] = static_cast<double>(query[j]) / qq.norm;
  qq.q16.resize(query.size());
  std::tie(qq.scale, qq.residual) = quantize_unit(std::span<const double>(unit), query_levels(query.size()), qq.q16.data());
  return qq;
}

void CorpusIndex::scan_q8(const QuantizedQuery& qq, std::int32_t* out) const {
  const std::size_t n = size();
  const std::size_t d = dim();
#ifdef LATENT_EDIT_VNNI
  // 32 columns per step: widen the int8 row to int16 and multiply-add
  // against the int16 query.
  const std::size_t full = d / 32;
  const std::size_t rest = d % 32;
  const __mmask32 tail_mask = rest == 0 ? 0 : static_cast<__mmask32>((1ULL << rest) - 1);
  const __m512i tail_q = _mm512_maskz_loadu_epi16(tail_mask, qq.q16.data() + full * 32);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int8_t* row = q8_.data() + i * d;
    __m512i acc = _mm512_setzero_si512();
    for (std::size_t b = 0; b < full; ++b) {
      const __m512i r16 = _mm512_cvtepi8_epi16(
          _mm256_loadu_si256(reinterpret_cast<const __m256i*>(row + b * 32)));
      acc = _mm512_dpwssd_epi32(acc, r16, _mm512_loadu_si512(qq.q16.data() + b * 32));
    }
    if (tail_mask != 0) {
      const __m512i r16 = _mm512_cvtepi8_epi16(_mm256_maskz_loadu_epi8(tail_mask, row + full * 32));
      acc = _mm512_dpwssd_epi32(acc, r16, tail_q);
    }
    out[i] = _mm512_reduce_add_epi32(acc);
  }
#else
  for (std::size_t i = 0; i < n; ++i) out[i] = dot_i8_i16(q8_.data() + i * d, qq.q16.data(), d);
#endif
}

std::vector<ScoredId> CorpusIndex::rescore(std::span<const float> query, double query_norm,
                                           const std::vector<std::size_t>& candidates,
                                           std::size_t k, Polarity polarity) const {
  std::vector<ScoredId> scored;
  scored.reserve(candidates.size());
  for (std::size_t r : candidates) {
    const double score = dot_f64(rows_.row(r), query) / (norms_[r] * query_norm);
    scored.push_back({ids_[r], score, r});
  }
  const auto cmp = [polarity](const ScoredId& a, const ScoredId& b) {
    return ranks_before(a, b, polarity);
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    cmp);
  scored.resize(k);
  return scored;
}

RetrievalPair CorpusIndex::retrieve_extremes(std::span<const float> query, std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (k > size()) {
    throw Error(ErrorCode::KTooLarge,
                "k = " + std::to_string(k) + " exceeds corpus size " + std::to_string(size()));
  }
  const QuantizedQuery qq = quantize_query(query);
  const std::size_t n = size();

  std::vector<std::int32_t> dots(n);
  scan_q8(qq, dots.data());
  const auto interval = [&](std::size_t i) {
    const double approx = q8_scale_[i] * qq.scale * static_cast<double>(dots[i]);
    const double bound = q8_scaled_norm_[i] * qq.residual + q8_residual_[i] + kBoundSlack;
    return std::pair{approx - bound, approx + bound};
  };

  // The k-th largest lower bound is a floor on the k-th best score, so rows
  // whose upper bound falls below it cannot make the top k. Same for bottom.
  BoundedHeap<std::greater<>> top_lower(k);
  BoundedHeap<std::less<>> bottom_upper(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = interval(i);
    top_lower.push(lo);
    bottom_upper.push(hi);
  }
  const double top_cut = top_lower.kth();
  const double bottom_cut = bottom_upper.kth();

  std::vector<std::size_t> top_candidates;
  std::vector<std::size_t> bottom_candidates;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = interval(i);
    if (hi >= top_cut) top_candidates.push_back(i);
    if (lo <= bottom_cut) bottom_candidates.push_back(i);
  }

  RetrievalPair out;
  out.most_similar = rescore(query, qq.norm, top_candidates, k, Polarity::MostSimilar);
  out.least_similar = rescore(query, qq.norm, bottom_candidates, k, Polarity::LeastSimilar);
  return out;
}

std::vector<ScoredId> CorpusIndex::retrieve(std::span<const float> query, std::size_t k,
                                            Polarity polarity) const {
  auto pair = retrieve_extremes(query, k);
  return polarity == Polarity::MostSimilar ? std::move(pair.most_similar)
                                           : std::move(pair.least_similar);
}

}  // namespace latent_edit
