// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/synthetic_backend.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "latent_edit/error.hpp"
#include "latent_edit/png.hpp"

namespace latent_edit {
namespace {

constexpr std::uint8_t kStyleMagic[4] = {'S', 'Y', 'N', '1'};

// Box-Muller over mt19937_64 so draws are identical across standard libraries.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : engine_(seed) {}
  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    } while (u1 <= 0.0);
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<std::string> default_synthetic_lexicon_tokens() {
  return {"smile", "blond",  "beard", "glasses", "old",   "bald",    "makeup", "lipstick",
          "young", "curly",  "tan",   "bangs",   "chin",  "female",  "male",   "surprised",
          "angry", "freckles", "wrinkles", "pale", "red",   "earrings", "hat",   "mustache"};
}

SyntheticBackend::SyntheticBackend(SyntheticBackendConfig config) : config_(std::move(config)) {
  const std::size_t d = config_.embed_dim;
  const std::size_t c = config_.style_dim;
  if (d == 0 || c == 0) throw Error(ErrorCode::InvalidArgument, "synthetic dims must be positive");
  if (c > d) {
    throw Error(ErrorCode::InvalidArgument,
                "synthetic backend needs embed_dim >= style_dim for a full-rank mixing matrix");
  }
  if (config_.channels_per_layer == 0) config_.channels_per_layer = c;

  Gaussian gauss(config_.seed);
  std::vector<std::size_t> axes(d);
  std::iota(axes.begin(), axes.end(), 0);
  for (std::size_t i = d; i > 1; --i) {
    std::swap(axes[i - 1], axes[gauss.engine()() % i]);
  }
  channel_axes_.assign(axes.begin(), axes.begin() + static_cast<std::ptrdiff_t>(c));

  if (config_.mixing.empty()) {
    config_.mixing.assign(d * c, 0.0);
    for (auto& v : config_.mixing) v = config_.mixing_noise * gauss();
    for (std::size_t ch = 0; ch < c; ++ch) config_.mixing[channel_axes_[ch] * c + ch] += 1.0;
  } else {
    if (config_.mixing.size() != d * c) {
      throw Error(ErrorCode::DimensionMismatch, "mixing matrix must be embed_dim x style_dim");
    }
    // Dominant row per column defines the channel axis.
    for (std::size_t ch = 0; ch < c; ++ch) {
      std::size_t best = 0;
      for (std::size_t r = 1; r < d; ++r) {
        if (std::abs(config_.mixing[r * c + ch]) > std::abs(config_.mixing[best * c + ch])) best = r;
      }
      channel_axes_[ch] = best;
    }
  }
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      a(config_.mixing.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(c));
  if (Eigen::FullPivLU<Eigen::MatrixXd>(a).rank() != static_cast<Eigen::Index>(c)) {
    throw Error(ErrorCode::InvalidArgument, "synthetic mixing matrix must have full column rank");
  }

  if (config_.lexicon.empty()) {
    const auto tokens = default_synthetic_lexicon_tokens();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      config_.lexicon.emplace(tokens[i], channel_axes_[i % c]);
    }
  }
  for (const auto& [token, axis] : config_.lexicon) {
    if (axis >= d) throw Error(ErrorCode::InvalidArgument, "lexicon axis out of range for " + token);
  }

  for (std::size_t off = 0; off < c; off += config_.channels_per_layer) layer_offsets_.push_back(off);

  Fingerprinter fp;
  fp.update("synthetic-v1").update_u64(config_.seed).update_u64(d).update_u64(c);
  fp.update_u64(config_.channels_per_layer).update_u64(config_.normalize_embeddings ? 1 : 0);
  fp.update(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(config_.mixing.data()),
      config_.mixing.size() * sizeof(double)));
  for (const auto& [token, axis] : config_.lexicon) fp.update(token).update_u64(axis);
  fp.update_u64(std::bit_cast<std::uint64_t>(config_.unknown_token_scale));

  descriptor_.name = "synthetic";
  descriptor_.embed_dim = d;
  descriptor_.style_dim = c;
  descriptor_.layer_offsets = layer_offsets_;
  descriptor_.capabilities = config_.capabilities;
  descriptor_.fingerprint = fp.hex();
  descriptor_.max_batch = config_.max_batch;
}

std::optional<std::size_t> SyntheticBackend::channel_for_axis(std::size_t axis) const {
  const auto it = std::find(channel_axes_.begin(), channel_axes_.end(), axis);
  if (it == channel_axes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - channel_axes_.begin());
}

std::optional<std::size_t> SyntheticBackend::axis_for_token(const std::string& token) const {
  const auto it = config_.lexicon.find(token);
  if (it == config_.lexicon.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> SyntheticBackend::tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

EmbeddingVector SyntheticBackend::finish_embedding(const std::vector<double>& v) const {
  double scale = 1.0;
  if (config_.normalize_embeddings) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (n2 > 0.0) scale = 1.0 / std::sqrt(n2);
  }
  EmbeddingVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] * scale);
  return out;
}

std::vector<EmbeddingVector> SyntheticBackend::embed_text(std::span<const std::string> texts) {
  descriptor_.require(Capability::EmbedText);
  const std::size_t d = config_.embed_dim;
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<double> acc(d, 0.0);
    for (const auto& token : tokenize(text)) {
      if (const auto axis = axis_for_token(token)) {
        acc[*axis] += 1.0;
        continue;
      }
      Gaussian noise(fnv1a(token, config_.seed));
      std::vector<double> v(d);
      double n2 = 0.0;
      for (auto& x : v) {
        x = noise();
        n2 += x * x;
      }
      const double s = config_.unknown_token_scale / std::sqrt(n2);
      for (std::size_t i = 0; i < d; ++i) acc[i] += v[i] * s;
    }
    out.push_back(finish_embedding(acc));
  }
  return out;
}

std::vector<double> SyntheticBackend::embed_style(const StyleVector& style) const {
  const std::size_t d = config_.embed_dim;
  const std::size_t c = config_.style_dim;
  if (style.size() != c) {
    throw Error(ErrorCode::DimensionMismatch, "style has " + std::to_string(style.size()) +
                                                  " channels, backend expects " + std::to_string(c));
  }
  std::vector<double> out(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) {
      acc += config_.mixing[r * c + ch] * static_cast<double>(style.values[ch]);
    }
    out[r] = acc;
  }
  return out;
}

Bytes SyntheticBackend::encode_style(const StyleVector& style) const {
  if (style.size() != config_.style_dim) {
    throw Error(ErrorCode::DimensionMismatch, "style has " + std::to_string(style.size()) +
                                                  " channels, backend expects " +
                                                  std::to_string(config_.style_dim));
  }
  GrayImage img;
  img.width = static_cast<std::uint32_t>(4 * (style.size() + 1));
  img.height = 1;
  img.pixels.assign(img.width, 0);
  std::copy(std::begin(kStyleMagic), std::end(kStyleMagic), img.pixels.begin());
  for (std::size_t c = 0; c < style.size(); ++c) {
    const auto bits = std::bit_cast<std::uint32_t>(style.values[c]);
    for (std::size_t i = 0; i < 4; ++i) {
      img.pixels[4 * (c + 1) + i] = static_cast<std::uint8_t>(bits >> (8 * i));
    }
  }
  return encode_png_gray(img);
}

StyleVector SyntheticBackend::decode_style(std::span<const std::uint8_t> image) const {
  const GrayImage img = decode_png_gray(image);
  if (img.height != 1 || img.width != 4 * (config_.style_dim + 1) ||
      !std::equal(std::begin(kStyleMagic), std::end(kStyleMagic), img.pixels.begin())) {
    throw Error(ErrorCode::DecodeError, "image was not produced by this synthetic generator");
  }
  StyleVector style;
  style.layer_offsets = layer_offsets_;
  style.values.resize(config_.style_dim);
  for (std::size_t ch = 0; ch < config_.style_dim; ++ch) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(img.pixels[4 * (ch + 1) + i]) << (8 * i);
    style.values[ch] = std::bit_cast<float>(bits);
  }
  return style;
}

std::vector<EmbeddingVector> SyntheticBackend::embed_image(std::span<const Bytes> images) {
  descriptor_.require(Capability::EmbedImage);
  std::vector<EmbeddingVector> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(finish_embedding(embed_style(decode_style(img))));
  return out;
}

std::vector<Bytes> SyntheticBackend::generate(std::span<const StyleVector> styles) {
  descriptor_.require(Capability::Generate);
  std::vector<Bytes> out;
  out.reserve(styles.size());
  for (const auto& s : styles) out.push_back(encode_style(s));
  return out;
}

std::vector<StyleVector> SyntheticBackend::invert(std::span<const Bytes> images) {
  descriptor_.require(Capability::Invert);
  std::vector<StyleVector> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(decode_style(img));
  return out;
}

std::vector<StyleVector> SyntheticBackend::sample_styles(std::size_t count, std::uint64_t seed) {
  Gaussian gauss(seed ^ (config_.seed << 1));
  std::vector<StyleVector> out(count);
  for (auto& s : out) {
    s.layer_offsets = layer_offsets_;
    s.values.resize(config_.style_dim);
    for (auto& v : s.values) v = static_cast<float>(gauss());
  }
  return out;
}

}  // namespace latent_edit
