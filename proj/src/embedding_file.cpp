// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/embedding_file.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "latent_edit/codec.hpp"
#include "latent_edit/error.hpp"

namespace latent_edit {
namespace {

constexpr std::array<char, 4> kMagic = {'E', 'M', 'B', 'D'};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

void write_header(std::ostream& out, std::uint64_t rows, std::uint32_t dim) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kEmbeddingFileVersion);
  put_le<std::uint64_t>(out, rows);
  put_le<std::uint32_t>(out, dim);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(Dtype::Float32));
}

void write_floats(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float v : values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
}

void write_manifest(const std::filesystem::path& payload, Json manifest,
                    const std::vector<std::string>& ids) {
  manifest["ids"] = ids;
  if (!manifest.contains("created")) manifest["created"] = iso8601_now();
  if (!manifest.contains("backend")) manifest["backend"] = "";
  std::ofstream out(manifest_path_for(payload), std::ios::trunc);
  out << manifest.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write manifest for " + payload.string());
}

void check_unique(const std::vector<std::string>& ids) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(ids.size());
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateId, "duplicate id '" + id + "'");
  }
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<float> values)
    : dim_(dim), values_(std::move(values)) {
  if (dim_ == 0 || values_.size() % dim_ != 0) {
    throw Error(ErrorCode::DimensionMismatch, "value count is not a multiple of dim");
  }
}

void EmbeddingMatrix::append_row(std::span<const float> values) {
  if (dim_ == 0) dim_ = values.size();
  if (values.size() != dim_ || dim_ == 0) {
    throw Error(ErrorCode::DimensionMismatch, "row has dimension " + std::to_string(values.size()) +
                                                  ", expected " + std::to_string(dim_));
  }
  values_.insert(values_.end(), values.begin(), values.end());
}

std::filesystem::path manifest_path_for(const std::filesystem::path& payload) {
  auto p = payload;
  p += ".json";
  return p;
}

void write_embedding_file(const std::filesystem::path& path, const EmbeddingMatrix& matrix,
                          const std::vector<std::string>& ids, Json manifest, Dtype dtype) {
  if (dtype != Dtype::Float32) {
    throw Error(ErrorCode::UnsupportedDtype,
                "dtype " + std::to_string(static_cast<int>(dtype)) + " is not supported");
  }
  if (ids.size() != matrix.rows()) {
    throw Error(ErrorCode::ManifestMismatch, "id count does not match row count");
  }
  check_unique(ids);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  write_header(out, matrix.rows(), static_cast<std::uint32_t>(matrix.dim()));
  write_floats(out, matrix.values());
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
  write_manifest(path, std::move(manifest), ids);
}

Json read_manifest(const std::filesystem::path& payload, std::string_view expected_kind) {
  const auto mpath = manifest_path_for(payload);
  std::ifstream in(mpath);
  if (!in) throw Error(ErrorCode::IoFailure, "missing manifest " + mpath.string());
  Json manifest;
  try {
    manifest = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ManifestMismatch, "unparseable manifest " + mpath.string() + ": " + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("ids") || !manifest["ids"].is_array()) {
    throw Error(ErrorCode::ManifestMismatch, "manifest " + mpath.string() + " has no ids array");
  }
  if (!expected_kind.empty()) {
    const std::string kind = manifest.value("kind", std::string("corpus"));
    if (kind != expected_kind) {
      throw Error(ErrorCode::WrongArtifactKind, "expected artifact kind '" +
                                                    std::string(expected_kind) + "', found '" +
                                                    kind + "'");
    }
  }
  return manifest;
}

EmbeddingFile read_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

  std::array<std::uint8_t, kEmbeddingHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() < 4 || std::memcmp(header.data(), kMagic.data(), 4) != 0) {
    throw Error(ErrorCode::BadMagic, path.string() + " is not an EMBD file");
  }
  if (static_cast<std::size_t>(in.gcount()) != header.size()) {
    throw Error(ErrorCode::TruncatedPayload, path.string() + ": truncated header");
  }
  const auto version = get_le<std::uint32_t>(header.data() + 4);
  if (version != kEmbeddingFileVersion) {
    throw Error(ErrorCode::VersionUnsupported,
                "EMBD version " + std::to_string(version) + " is not supported");
  }
  const auto rows = get_le<std::uint64_t>(header.data() + 8);
  const auto dim = get_le<std::uint32_t>(header.data() + 16);
  const auto dtype = header[20];
  if (dtype != static_cast<std::uint8_t>(Dtype::Float32)) {
    throw Error(ErrorCode::UnsupportedDtype, "dtype " + std::to_string(dtype) + " is not supported");
  }
  if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "EMBD dim must be positive");

  if (rows > std::numeric_limits<std::uint64_t>::max() / dim / sizeof(float)) {
    throw Error(ErrorCode::TruncatedPayload, path.string() + ": row count is implausibly large");
  }
  const std::uint64_t expected = rows * dim * sizeof(float);
  in.seekg(0, std::ios::end);
  const auto total = static_cast<std::uint64_t>(in.tellg());
  if (total - kEmbeddingHeaderBytes != expected) {
    throw Error(ErrorCode::TruncatedPayload,
                path.string() + ": payload has " + std::to_string(total - kEmbeddingHeaderBytes) +
                    " bytes, expected " + std::to_string(expected));
  }
  in.seekg(static_cast<std::streamoff>(kEmbeddingHeaderBytes));

  std::vector<float> values(rows * dim);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(expected));
  if (!in) throw Error(ErrorCode::TruncatedPayload, path.string() + ": short read");
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& v : values) {
      const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
      v = std::bit_cast<float>(get_le<std::uint32_t>(p));
    }
  }

  EmbeddingFile file;
  file.manifest = read_manifest(path);
  file.ids = file.manifest["ids"].get<std::vector<std::string>>();
  if (file.ids.size() != rows) {
    throw Error(ErrorCode::ManifestMismatch, "manifest lists " + std::to_string(file.ids.size()) +
                                                 " ids for " + std::to_string(rows) + " rows");
  }
  check_unique(file.ids);
  file.matrix = EmbeddingMatrix(dim, std::move(values));
  return file;
}

EmbeddingFileWriter::EmbeddingFileWriter(std::filesystem::path path, std::uint32_t dim)
    : path_(std::move(path)), dim_(dim), out_(path_, std::ios::binary | std::ios::trunc) {
  if (dim_ == 0) throw Error(ErrorCode::DimensionMismatch, "EMBD dim must be positive");
  if (!out_) throw Error(ErrorCode::IoFailure, "cannot open " + path_.string() + " for writing");
  write_header(out_, 0, dim_);
}

EmbeddingFileWriter::~EmbeddingFileWriter() = default;

void EmbeddingFileWriter::append(std::string id, std::span<const float> row) {
  if (row.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "row for '" + id + "' has dimension " +
                                                  std::to_string(row.size()) + ", expected " +
                                                  std::to_string(dim_));
  }
  write_floats(out_, row);
  ids_.push_back(std::move(id));
}

void EmbeddingFileWriter::finish(Json manifest) {
  if (finished_) return;
  check_unique(ids_);
  out_.seekp(8);
  put_le<std::uint64_t>(out_, ids_.size());
  out_.flush();
  if (!out_) throw Error(ErrorCode::IoFailure, "write failed for " + path_.string());
  out_.close();
  write_manifest(path_, std::move(manifest), ids_);
  finished_ = true;
}

}  // namespace latent_edit
