// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/backend.hpp"

#include <algorithm>

#include "latent_edit/error.hpp"

namespace latent_edit {

std::string_view capability_name(Capability cap) noexcept {
  switch (cap) {
    case Capability::EmbedText: return "embed_text";
    case Capability::EmbedImage: return "embed_image";
    case Capability::Generate: return "generate";
    case Capability::Invert: return "invert";
  }
  return "unknown";
}

void BackendDescriptor::require(Capability cap) const {
  if (has(cap)) return;
  const std::string msg =
      "backend '" + name + "' does not support " + std::string(capability_name(cap));
  throw Error(cap == Capability::Invert ? ErrorCode::InversionUnsupported
                                        : ErrorCode::CapabilityMissing,
              msg);
}

std::vector<StyleVector> Backend::sample_styles(std::size_t, std::uint64_t) {
  throw Error(ErrorCode::CapabilityMissing, "backend cannot sample styles directly");
}

EmbeddingVector Backend::embed_text(const std::string& text) {
  auto out = embed_text(std::span<const std::string>(&text, 1));
  if (out.size() != 1) throw Error(ErrorCode::BackendFailure, "embed_text returned no embedding");
  return std::move(out.front());
}

ThrottledBackend::ThrottledBackend(std::shared_ptr<Backend> inner, std::ptrdiff_t max_in_flight)
    : inner_(std::move(inner)), slots_(std::clamp<std::ptrdiff_t>(max_in_flight, 1, 1024)) {}

template <typename F>
auto ThrottledBackend::guarded(F&& f) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};
  return f();
}

BackendDescriptor ThrottledBackend::describe() {
  return guarded([&] { return inner_->describe(); });
}
std::vector<EmbeddingVector> ThrottledBackend::embed_text(std::span<const std::string> texts) {
  return guarded([&] { return inner_->embed_text(texts); });
}
std::vector<EmbeddingVector> ThrottledBackend::embed_image(std::span<const Bytes> images) {
  return guarded([&] { return inner_->embed_image(images); });
}
std::vector<Bytes> ThrottledBackend::generate(std::span<const StyleVector> styles) {
  return guarded([&] { return inner_->generate(styles); });
}
std::vector<StyleVector> ThrottledBackend::invert(std::span<const Bytes> images) {
  return guarded([&] { return inner_->invert(images); });
}
std::vector<StyleVector> ThrottledBackend::sample_styles(std::size_t count, std::uint64_t seed) {
  return guarded([&] { return inner_->sample_styles(count, seed); });
}

}  // namespace latent_edit
