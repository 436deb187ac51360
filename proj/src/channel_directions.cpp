// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/channel_directions.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "latent_edit/codec.hpp"
#include "latent_edit/error.hpp"

namespace latent_edit {
namespace {

constexpr const char* kChannelKind = "channel_directions";
constexpr const char* kStylesKind = "styles";

std::string checkpoint_key(const BackendDescriptor& desc, std::span<const StyleVector> styles,
                           const StyleStatistics& stats, const ChannelDirectionOptions& options) {
  Fingerprinter fp;
  fp.update("channel-checkpoint-v1").update(desc.fingerprint);
  fp.update_u64(std::bit_cast<std::uint64_t>(options.multiplier));
  fp.update_u64(options.normalize_embeddings ? 1 : 0);
  for (const auto& s : styles) {
    fp.update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.values.data()),
                                            s.values.size() * sizeof(float)));
  }
  for (double v : stats.sigma) fp.update_u64(std::bit_cast<std::uint64_t>(v));
  return fp.hex();
}

// Checkpoint: JSON lines, first {"key": ...}, then {"c": index, "row": [...]}.
// A torn final line from an interrupted write is ignored.
std::map<std::size_t, std::vector<float>> read_checkpoint(const std::filesystem::path& path,
                                                          const std::string& key, std::size_t dim) {
  std::map<std::size_t, std::vector<float>> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  try {
    if (Json::parse(line).value("key", std::string()) != key) return rows;
  } catch (const Json::exception&) {
    return rows;
  }
  while (std::getline(in, line)) {
    try {
      const Json rec = Json::parse(line);
      auto row = rec.at("row").get<std::vector<float>>();
      if (row.size() == dim) rows[rec.at("c").get<std::size_t>()] = std::move(row);
    } catch (const Json::exception&) {
      break;
    }
  }
  return rows;
}

std::vector<float> compute_channel(Backend& backend, std::span<const StyleVector> styles,
                                   std::size_t channel, double step, std::size_t dim,
                                   bool normalize) {
  std::vector<StyleVector> batch;
  batch.reserve(2 * styles.size());
  for (const auto& s : styles) {
    StyleVector plus = s;
    StyleVector minus = s;
    plus.values[channel] = static_cast<float>(static_cast<double>(s.values[channel]) + step);
    minus.values[channel] = static_cast<float>(static_cast<double>(s.values[channel]) - step);
    batch.push_back(std::move(plus));
    batch.push_back(std::move(minus));
  }
  const auto images = backend.generate(batch);
  if (images.size() != batch.size()) throw Error(ErrorCode::BackendFailure, "generate count mismatch");
  const auto emb = backend.embed_image(images);
  if (emb.size() != images.size()) throw Error(ErrorCode::BackendFailure, "embed_image count mismatch");

  std::vector<double> acc(dim, 0.0);
  for (std::size_t i = 0; i < styles.size(); ++i) {
    const auto& hp = emb[2 * i];
    const auto& hm = emb[2 * i + 1];
    if (hp.size() != dim || hm.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "image embedding has dimension " +
                                                    std::to_string(hp.size()) + ", expected " +
                                                    std::to_string(dim));
    }
    double sp = 1.0;
    double sm = 1.0;
    if (normalize) {
      const double np = norm_f64(hp);
      const double nm = norm_f64(hm);
      if (np == 0.0 || nm == 0.0) throw Error(ErrorCode::BackendFailure, "zero image embedding");
      sp = 1.0 / np;
      sm = 1.0 / nm;
    }
    for (std::size_t j = 0; j < dim; ++j) {
      acc[j] += static_cast<double>(hp[j]) * sp - static_cast<double>(hm[j]) * sm;
    }
  }
  std::vector<float> row(dim);
  const double inv_n = 1.0 / static_cast<double>(styles.size());
  for (std::size_t j = 0; j < dim; ++j) row[j] = static_cast<float>(acc[j] * inv_n);
  return row;
}

}  // namespace

StyleStatistics compute_style_statistics(std::span<const StyleVector> styles, std::uint64_t seed) {
  if (styles.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "style statistics need at least two samples");
  }
  const std::size_t c = styles.front().size();
  std::vector<double> mean(c, 0.0);
  for (const auto& s : styles) {
    if (s.size() != c) throw Error(ErrorCode::DimensionMismatch, "style samples differ in size");
    for (std::size_t j = 0; j < c; ++j) mean[j] += s.values[j];
  }
  const double n = static_cast<double>(styles.size());
  for (auto& m : mean) m /= n;
  std::vector<double> var(c, 0.0);
  for (const auto& s : styles) {
    for (std::size_t j = 0; j < c; ++j) {
      const double dlt = s.values[j] - mean[j];
      var[j] += dlt * dlt;
    }
  }
  StyleStatistics stats;
  stats.sigma.resize(c);
  for (std::size_t j = 0; j < c; ++j) stats.sigma[j] = std::sqrt(var[j] / n);
  stats.sample_count = styles.size();
  stats.seed = seed;
  return stats;
}

bool ChannelDirectionMatrix::is_degenerate(std::size_t channel) const {
  return std::binary_search(degenerate_channels.begin(), degenerate_channels.end(), channel);
}

std::string ChannelDirectionMatrix::fingerprint() const {
  Fingerprinter fp;
  fp.update("channels").update(backend_fingerprint).update_u64(rows.dim());
  fp.update_u64(std::bit_cast<std::uint64_t>(sigma_multiplier)).update_u64(sample_count);
  const auto& v = rows.values();
  fp.update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(v.data()),
                                          v.size() * sizeof(float)));
  return fp.hex();
}

ChannelDirectionMatrix compute_channel_directions(Backend& backend,
                                                  std::span<const StyleVector> styles,
                                                  const StyleStatistics& stats,
                                                  const ChannelDirectionOptions& options) {
  if (!(options.multiplier > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma multiplier must be positive");
  }
  if (styles.empty()) throw Error(ErrorCode::TooFewSamples, "no style samples");
  const BackendDescriptor desc = backend.describe();
  desc.require(Capability::Generate);
  desc.require(Capability::EmbedImage);
  const std::size_t c = stats.sigma.size();
  if (c != desc.style_dim) {
    throw Error(ErrorCode::DimensionMismatch, "statistics cover " + std::to_string(c) +
                                                  " channels, backend has " +
                                                  std::to_string(desc.style_dim));
  }
  for (const auto& s : styles) {
    if (s.size() != c) throw Error(ErrorCode::DimensionMismatch, "style sample size mismatch");
  }
  const std::size_t dim = desc.embed_dim;

  ChannelDirectionMatrix out;
  out.rows = EmbeddingMatrix(c, dim);
  out.sigma_multiplier = options.multiplier;
  out.sample_count = styles.size();
  out.backend_fingerprint = desc.fingerprint;
  out.normalized_embeddings = options.normalize_embeddings;
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (stats.sigma[ch] == 0.0) out.degenerate_channels.push_back(ch);
  }

  std::vector<bool> done(c, false);
  std::size_t finished = 0;
  for (std::size_t ch : out.degenerate_channels) {
    done[ch] = true;
    ++finished;
  }

  std::ofstream checkpoint;
  if (!options.checkpoint.empty()) {
    const std::string key = checkpoint_key(desc, styles, stats, options);
    auto restored = read_checkpoint(options.checkpoint, key, dim);
    // Rewrite so a torn tail from an earlier run is dropped.
    checkpoint.open(options.checkpoint, std::ios::trunc);
    if (!checkpoint) throw Error(ErrorCode::IoFailure, "cannot write checkpoint " + options.checkpoint.string());
    checkpoint << Json{{"key", key}}.dump() << '\n';
    for (auto& [ch, row] : restored) {
      if (ch >= c || done[ch]) continue;
      std::copy(row.begin(), row.end(), out.rows.row(ch).begin());
      checkpoint << Json{{"c", ch}, {"row", row}}.dump() << '\n';
      done[ch] = true;
      ++finished;
    }
    checkpoint.flush();
  }

  std::vector<std::size_t> pending;
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (!done[ch]) pending.push_back(ch);
  }
  if (options.progress) options.progress(finished, c);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex mu;
  const auto worker = [&] {
    while (!failed.load()) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= pending.size()) return;
      const std::size_t ch = pending[idx];
      try {
        const double step = options.multiplier * stats.sigma[ch];
        auto row = compute_channel(backend, styles, ch, step, dim, options.normalize_embeddings);
        std::lock_guard lock(mu);
        std::copy(row.begin(), row.end(), out.rows.row(ch).begin());
        if (checkpoint.is_open()) {
          checkpoint << Json{{"c", ch}, {"row", row}}.dump() << '\n';
          checkpoint.flush();
        }
        ++finished;
        if (options.progress) options.progress(finished, c);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.max_in_flight, 1, std::max<std::size_t>(pending.size(), 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

void save_channel_directions(const ChannelDirectionMatrix& matrix, const std::filesystem::path& path) {
  std::vector<std::string> ids;
  ids.reserve(matrix.channels());
  for (std::size_t ch = 0; ch < matrix.channels(); ++ch) ids.push_back("channel_" + std::to_string(ch));
  Json manifest = {
      {"kind", kChannelKind},
      {"backend", matrix.backend_fingerprint},
      {"backend_fingerprint", matrix.backend_fingerprint},
      {"multiplier", matrix.sigma_multiplier},
      {"sample_count", matrix.sample_count},
      {"normalized_embeddings", matrix.normalized_embeddings},
      {"degenerate_channels", matrix.degenerate_channels},
  };
  write_embedding_file(path, matrix.rows, ids, std::move(manifest));
}

ChannelDirectionMatrix load_channel_directions(const std::filesystem::path& path) {
  read_manifest(path, kChannelKind);
  EmbeddingFile file = read_embedding_file(path);
  ChannelDirectionMatrix out;
  out.rows = std::move(file.matrix);
  try {
    out.sigma_multiplier = file.manifest.at("multiplier").get<double>();
    out.sample_count = file.manifest.at("sample_count").get<std::size_t>();
    out.backend_fingerprint = file.manifest.at("backend_fingerprint").get<std::string>();
    out.normalized_embeddings = file.manifest.value("normalized_embeddings", true);
    out.degenerate_channels =
        file.manifest.value("degenerate_channels", std::vector<std::size_t>{});
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ManifestMismatch, "channel-direction manifest incomplete: " + std::string(e.what()));
  }
  std::sort(out.degenerate_channels.begin(), out.degenerate_channels.end());
  for (float v : out.rows.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "channel directions contain non-finite values");
  }
  return out;
}

bool check_backend_fingerprint(const ChannelDirectionMatrix& matrix,
                               const BackendDescriptor& descriptor, bool strict) {
  if (matrix.backend_fingerprint == descriptor.fingerprint) return true;
  if (strict) {
    throw Error(ErrorCode::FingerprintMismatch,
                "channel directions were computed for backend " + matrix.backend_fingerprint +
                    ", current backend is " + descriptor.fingerprint);
  }
  return false;
}

void save_styles(std::span<const StyleVector> styles, const std::filesystem::path& path,
                 const std::string& backend_fingerprint) {
  if (styles.empty()) throw Error(ErrorCode::EmptyIndex, "no styles to write");
  EmbeddingMatrix m;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < styles.size(); ++i) {
    m.append_row(styles[i].values);
    ids.push_back("style_" + std::to_string(i));
  }
  Json manifest = {{"kind", kStylesKind},
                   {"backend", backend_fingerprint},
                   {"layer_offsets", styles.front().layer_offsets}};
  write_embedding_file(path, m, ids, std::move(manifest));
}

std::vector<StyleVector> load_styles(const std::filesystem::path& path) {
  read_manifest(path, kStylesKind);
  const EmbeddingFile file = read_embedding_file(path);
  const auto offsets = file.manifest.value("layer_offsets", std::vector<std::size_t>{});
  std::vector<StyleVector> out(file.matrix.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto r = file.matrix.row(i);
    out[i].values.assign(r.begin(), r.end());
    out[i].layer_offsets = offsets;
  }
  return out;
}

}  // namespace latent_edit
