// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/embedding_file.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "test_util.hpp"

namespace latent_edit {
namespace {

using testing::code_of;
using testing::TempDir;

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

TEST(EmbeddingFile, HeaderLayoutIsLittleEndian) {
  TempDir dir;
  const auto path = dir / "m.embd";
  write_embedding_file(path, EmbeddingMatrix(2, {1.0F, 2.0F, 3.0F, 4.0F, 5.0F, 6.0F}), {"a", "b", "c"});
  const auto bytes = slurp(path);
  ASSERT_EQ(bytes.size(), kEmbeddingHeaderBytes + 3 * 2 * 4);
  EXPECT_EQ(std::memcmp(bytes.data(), "EMBD", 4), 0);
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes[16], 2);
  EXPECT_EQ(bytes[20], 0);
  float first = 0.0F;
  std::memcpy(&first, bytes.data() + kEmbeddingHeaderBytes, 4);
  EXPECT_EQ(first, 1.0F);
}

TEST(EmbeddingFile, RoundTripIsBitExact) {
  TempDir dir;
  const auto path = dir / "m.embd";
  auto m = testing::random_matrix(37, 11, 4);
  m.row(3)[2] = -0.0F;
  m.row(5)[0] = 1e-42F;  // subnormal
  const auto ids = testing::numbered_ids(37);
  write_embedding_file(path, m, ids, {{"backend", "xyz"}});
  const auto f = read_embedding_file(path);
  EXPECT_EQ(f.ids, ids);
  ASSERT_EQ(f.matrix.values().size(), m.values().size());
  EXPECT_EQ(std::memcmp(f.matrix.values().data(), m.values().data(), m.values().size() * 4), 0);
  EXPECT_EQ(f.manifest["backend"], "xyz");
  EXPECT_TRUE(f.manifest.contains("created"));
}

TEST(EmbeddingFile, ThreeRowExample) {
  TempDir dir;
  const auto path = dir / "m.embd";
  write_embedding_file(path, EmbeddingMatrix(2, {1, 0, 0, 1, 0.6F, 0.8F}), {"a", "b", "c"});
  const auto f = read_embedding_file(path);
  EXPECT_EQ(f.matrix.rows(), 3U);
  EXPECT_EQ(f.matrix.dim(), 2U);
}

TEST(EmbeddingFile, TruncatedPayload) {
  TempDir dir;
  const auto path = dir / "m.embd";
  write_embedding_file(path, EmbeddingMatrix(2, {1, 2, 3, 4}), {"a", "b"});
  auto bytes = slurp(path);
  bytes.pop_back();
  spit(path, bytes);
  EXPECT_EQ(code_of([&] { read_embedding_file(path); }), ErrorCode::TruncatedPayload);
  bytes.push_back(0);
  bytes.push_back(0);
  spit(path, bytes);
  EXPECT_EQ(code_of([&] { read_embedding_file(path); }), ErrorCode::TruncatedPayload);
  spit(path, std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10));
  EXPECT_EQ(code_of([&] { read_embedding_file(path); }), ErrorCode::TruncatedPayload);
}

TEST(EmbeddingFile, HeaderErrors) {
  TempDir dir;
  const auto path = dir / "m.embd";
  write_embedding_file(path, EmbeddingMatrix(2, {1, 2, 3, 4}), {"a", "b"});
  const auto good = slurp(path);

  auto bytes = good;
  bytes[0] = 'X';
  spit(path, bytes);
  EXPECT_EQ(code_of([&] { read_embedding_file(path); }), ErrorCode::BadMagic);

  bytes = good;
  bytes[4] = 2;
  spit(path, bytes);
  EXPECT_EQ(code_of([&] { read_embedding_file(path); }), ErrorCode::VersionUnsupported);

  bytes = good;
  bytes[20] = 1;
  spit(path, bytes);
  EXPECT_EQ(code_of([&] { read_embedding_file(path); }), ErrorCode::UnsupportedDtype);

  bytes = good;
  bytes[15] = 0x7f;  // absurd row count
  spit(path, bytes);
  EXPECT_EQ(code_of([&] { read_embedding_file(path); }), ErrorCode::TruncatedPayload);
}

TEST(EmbeddingFile, ManifestMismatch) {
  TempDir dir;
  const auto path = dir / "m.embd";
  write_embedding_file(path, EmbeddingMatrix(2, {1, 2, 3, 4}), {"a", "b"});
  std::ofstream(manifest_path_for(path), std::ios::trunc) << R"({"ids": ["a"]})";
  EXPECT_EQ(code_of([&] { read_embedding_file(path); }), ErrorCode::ManifestMismatch);
  std::ofstream(manifest_path_for(path), std::ios::trunc) << "not json";
  EXPECT_EQ(code_of([&] { read_embedding_file(path); }), ErrorCode::ManifestMismatch);
  std::ofstream(manifest_path_for(path), std::ios::trunc) << R"({"ids": ["a", "a"]})";
  EXPECT_EQ(code_of([&] { read_embedding_file(path); }), ErrorCode::DuplicateId);
  std::filesystem::remove(manifest_path_for(path));
  EXPECT_EQ(code_of([&] { read_embedding_file(path); }), ErrorCode::IoFailure);
}

TEST(EmbeddingFile, WriteErrors) {
  TempDir dir;
  const EmbeddingMatrix m(2, {1, 2, 3, 4});
  EXPECT_EQ(code_of([&] { write_embedding_file(dir / "x", m, {"a", "b"}, {}, static_cast<Dtype>(1)); }),
            ErrorCode::UnsupportedDtype);
  EXPECT_EQ(code_of([&] { write_embedding_file(dir / "x", m, {"a"}); }), ErrorCode::ManifestMismatch);
  EXPECT_EQ(code_of([&] { write_embedding_file(dir / "x", m, {"a", "a"}); }), ErrorCode::DuplicateId);
  EXPECT_EQ(code_of([&] { write_embedding_file(dir / "no" / "such" / "x", m, {"a", "b"}); }),
            ErrorCode::IoFailure);
}

TEST(EmbeddingFile, KindCheck) {
  TempDir dir;
  const auto path = dir / "m.embd";
  write_embedding_file(path, EmbeddingMatrix(2, {1, 2}), {"a"}, {{"kind", "styles"}});
  EXPECT_EQ(read_manifest(path, "styles")["kind"], "styles");
  EXPECT_EQ(code_of([&] { read_manifest(path, "corpus"); }), ErrorCode::WrongArtifactKind);
}

TEST(EmbeddingFileWriter, StreamingMatchesBatchWrite) {
  TempDir dir;
  const auto m = testing::random_matrix(25, 7, 9);
  const auto ids = testing::numbered_ids(25);
  write_embedding_file(dir / "batch.embd", m, ids);
  {
    EmbeddingFileWriter w(dir / "stream.embd", 7);
    for (std::size_t i = 0; i < m.rows(); ++i) w.append(ids[i], m.row(i));
    EXPECT_EQ(code_of([&] { w.append("bad", std::vector<float>(3)); }), ErrorCode::DimensionMismatch);
    w.finish();
  }
  EXPECT_EQ(slurp(dir / "batch.embd"), slurp(dir / "stream.embd"));
  EXPECT_EQ(read_embedding_file(dir / "stream.embd").ids, ids);
}

TEST(EmbeddingMatrix, RejectsRaggedRows) {
  EmbeddingMatrix m;
  m.append_row(std::vector<float>{1, 2});
  EXPECT_EQ(code_of([&] { m.append_row(std::vector<float>{1, 2, 3}); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([] { EmbeddingMatrix(3, std::vector<float>(4)); }), ErrorCode::DimensionMismatch);
}

}  // namespace
}  // namespace latent_edit
