// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace latent_edit {

using Json = nlohmann::json;

/// Dense row-major float32 matrix; the in-memory form of every EMBD payload.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim) : dim_(dim), values_(rows * dim, 0.0F) {}
  EmbeddingMatrix(std::size_t dim, std::vector<float> values);

  std::size_t rows() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const float> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  std::span<float> row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }

  const std::vector<float>& values() const noexcept { return values_; }

  void append_row(std::span<const float> values);

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

enum class Dtype : std::uint8_t { Float32 = 0 };

inline constexpr std::uint32_t kEmbeddingFileVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 4 + 4 + 8 + 4 + 1;

/// Payload plus the sidecar manifest (`ids`, `backend`, `created`, `kind`, ...).
struct EmbeddingFile {
  EmbeddingMatrix matrix;
  std::vector<std::string> ids;
  Json manifest = Json::object();
};

/// Sidecar manifest lives next to the payload: `<payload>.json`.
std::filesystem::path manifest_path_for(const std::filesystem::path& payload);

/// Writes payload and manifest. `manifest` may carry any extra fields; `ids`
/// is always overwritten from `ids`, and `created` is filled when absent.
void write_embedding_file(const std::filesystem::path& path, const EmbeddingMatrix& matrix,
                          const std::vector<std::string>& ids, Json manifest = Json::object(),
                          Dtype dtype = Dtype::Float32);

/// Reads and validates header, payload length and manifest id count.
/// Throws Error with BadMagic / VersionUnsupported / UnsupportedDtype /
/// TruncatedPayload / ManifestMismatch / IoFailure.
EmbeddingFile read_embedding_file(const std::filesystem::path& path);

/// Reads only the manifest and checks `kind` when `expected_kind` is non-empty.
Json read_manifest(const std::filesystem::path& payload, std::string_view expected_kind = {});

/// Streams rows to disk without holding the payload in memory; the row count
/// in the header is patched in by finish().
class EmbeddingFileWriter {
 public:
  EmbeddingFileWriter(std::filesystem::path path, std::uint32_t dim);
  EmbeddingFileWriter(const EmbeddingFileWriter&) = delete;
  EmbeddingFileWriter& operator=(const EmbeddingFileWriter&) = delete;
  ~EmbeddingFileWriter();

  void append(std::string id, std::span<const float> row);
  std::size_t rows() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  void finish(Json manifest = Json::object());

 private:
  std::filesystem::path path_;
  std::uint32_t dim_;
  std::ofstream out_;
  std::vector<std::string> ids_;
  bool finished_ = false;
};

}  // namespace latent_edit
