// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "latent_edit/codec.hpp"
#include "latent_edit/embedding_store.hpp"

namespace latent_edit {

/// A point in the generator's style space. layer_offsets[l] is the first
/// channel of synthesis layer l.
struct StyleVector {
  std::vector<float> values;
  std::vector<std::size_t> layer_offsets;

  std::size_t size() const noexcept { return values.size(); }
  friend bool operator==(const StyleVector&, const StyleVector&) = default;
};

enum class Capability : std::uint32_t {
  EmbedText = 1U << 0,
  EmbedImage = 1U << 1,
  Generate = 1U << 2,
  Invert = 1U << 3,
};

inline constexpr std::uint32_t kAllCapabilities = 0xF;

std::string_view capability_name(Capability cap) noexcept;

struct BackendDescriptor {
  std::string name;
  std::size_t embed_dim = 0;
  std::size_t style_dim = 0;
  std::vector<std::size_t> layer_offsets;
  std::uint32_t capabilities = 0;
  std::string fingerprint;
  std::size_t max_batch = 0;  // 0: unlimited

  bool has(Capability cap) const noexcept {
    return (capabilities & static_cast<std::uint32_t>(cap)) != 0;
  }
  // Throws CapabilityMissing (InversionUnsupported for Invert).
  void require(Capability cap) const;

  friend bool operator==(const BackendDescriptor&, const BackendDescriptor&) = default;
};

/// The four model roles behind one interface. Implementations must be safe to
/// call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendDescriptor describe() = 0;
  virtual std::vector<EmbeddingVector> embed_text(std::span<const std::string> texts) = 0;
  virtual std::vector<EmbeddingVector> embed_image(std::span<const Bytes> images) = 0;
  virtual std::vector<Bytes> generate(std::span<const StyleVector> styles) = 0;
  virtual std::vector<StyleVector> invert(std::span<const Bytes> images) = 0;

  /// Draws style vectors directly from the generator's prior. Not part of the
  /// wire protocol; only in-process backends implement it.
  virtual std::vector<StyleVector> sample_styles(std::size_t count, std::uint64_t seed);

  EmbeddingVector embed_text(const std::string& text);
};

/// Bounds the number of concurrent calls into the wrapped backend.
class ThrottledBackend final : public Backend {
 public:
  ThrottledBackend(std::shared_ptr<Backend> inner, std::ptrdiff_t max_in_flight);

  BackendDescriptor describe() override;
  std::vector<EmbeddingVector> embed_text(std::span<const std::string> texts) override;
  std::vector<EmbeddingVector> embed_image(std::span<const Bytes> images) override;
  std::vector<Bytes> generate(std::span<const StyleVector> styles) override;
  std::vector<StyleVector> invert(std::span<const Bytes> images) override;
  std::vector<StyleVector> sample_styles(std::size_t count, std::uint64_t seed) override;
  using Backend::embed_text;

 private:
  template <typename F>
  auto guarded(F&& f);

  std::shared_ptr<Backend> inner_;
  std::counting_semaphore<1024> slots_;
};

}  // namespace latent_edit
