// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/wire.hpp"

#include <httplib.h>

#include <algorithm>

#include "latent_edit/error.hpp"

namespace latent_edit {
namespace {

constexpr Capability kAllCaps[] = {Capability::EmbedText, Capability::EmbedImage,
                                   Capability::Generate, Capability::Invert};

std::vector<std::string> encode_images(std::span<const Bytes> images) {
  std::vector<std::string> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(base64_encode(img));
  return out;
}

std::vector<Bytes> decode_images(const Json& arr) {
  std::vector<Bytes> out;
  out.reserve(arr.size());
  for (const auto& s : arr) out.push_back(base64_decode(s.get<std::string>()));
  return out;
}

std::vector<EmbeddingVector> parse_vectors(const Json& arr, std::size_t expected_count,
                                           std::size_t expected_dim, const char* what) {
  if (!arr.is_array() || arr.size() != expected_count) {
    throw Error(ErrorCode::BackendFailure, std::string(what) + ": expected " +
                                               std::to_string(expected_count) + " results");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    auto vec = v.get<std::vector<float>>();
    if (vec.size() != expected_dim) {
      throw Error(ErrorCode::DimensionMismatch, std::string(what) + " returned dimension " +
                                                    std::to_string(vec.size()) + ", descriptor says " +
                                                    std::to_string(expected_dim));
    }
    out.push_back(std::move(vec));
  }
  return out;
}

}  // namespace

Json descriptor_to_json(const BackendDescriptor& desc) {
  Json caps = Json::array();
  for (auto cap : kAllCaps) {
    if (desc.has(cap)) caps.push_back(std::string(capability_name(cap)));
  }
  return {{"name", desc.name},
          {"embed_dim", desc.embed_dim},
          {"style_dim", desc.style_dim},
          {"layer_offsets", desc.layer_offsets},
          {"capabilities", caps},
          {"fingerprint", desc.fingerprint},
          {"max_batch", desc.max_batch}};
}

BackendDescriptor descriptor_from_json(const Json& j) {
  BackendDescriptor d;
  try {
    d.name = j.at("name").get<std::string>();
    d.embed_dim = j.at("embed_dim").get<std::size_t>();
    d.style_dim = j.at("style_dim").get<std::size_t>();
    d.layer_offsets = j.value("layer_offsets", std::vector<std::size_t>{});
    d.fingerprint = j.at("fingerprint").get<std::string>();
    d.max_batch = j.value("max_batch", std::size_t{0});
    for (const auto& c : j.at("capabilities")) {
      const auto name = c.get<std::string>();
      for (auto cap : kAllCaps) {
        if (capability_name(cap) == name) d.capabilities |= static_cast<std::uint32_t>(cap);
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BackendFailure, std::string("malformed descriptor: ") + e.what());
  }
  if (d.embed_dim == 0 || d.style_dim == 0) {
    throw Error(ErrorCode::BackendFailure, "descriptor reports a zero dimension");
  }
  return d;
}

Json error_body(ErrorCode code, const std::string& message) {
  return {{"error",
           {{"code", std::string(error_code_name(code))},
            {"exit_code", static_cast<int>(exit_code_for(code))},
            {"message", message}}}};
}

std::optional<ErrorCode> error_code_from_name(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::FingerprintMismatch); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (error_code_name(code) == name) return code;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

RemoteBackend::RemoteBackend(std::string base_url, RemoteBackendOptions options)
    : base_url_(std::move(base_url)), options_(options) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

Json RemoteBackend::post(const std::string& path, const Json& body) {
  const std::string payload = body.dump();
  std::string last_error;
  auto backoff = options_.initial_backoff;
  for (int attempt = 0; attempt < std::max(1, options_.max_attempts); ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(base_url_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout).count();
    client.set_connection_timeout(std::max<long long>(1, secs), 0);
    client.set_read_timeout(std::max<long long>(1, secs), 0);
    const auto res = client.Post(path, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    Json parsed;
    try {
      parsed = Json::parse(res->body);
    } catch (const Json::exception&) {
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      throw Error(ErrorCode::BackendFailure, path + ": unparseable response body");
    }
    if (res->status == 200) return parsed;
    std::string message = "HTTP " + std::to_string(res->status);
    auto code = ErrorCode::BackendFailure;
    if (parsed.contains("error") && parsed["error"].is_object()) {
      message = parsed["error"].value("message", message);
      if (auto c = error_code_from_name(parsed["error"].value("code", std::string()))) code = *c;
    }
    if (res->status >= 500 && code == ErrorCode::BackendFailure) {
      last_error = message;
      continue;
    }
    throw Error(code, path + ": " + message);
  }
  throw Error(ErrorCode::BackendFailure, path + " failed after retries: " + last_error);
}

BackendDescriptor RemoteBackend::cached_descriptor() {
  {
    std::lock_guard lock(mu_);
    if (descriptor_) return *descriptor_;
  }
  auto desc = descriptor_from_json(post("/v1/describe", Json::object()));
  std::lock_guard lock(mu_);
  descriptor_ = desc;
  return desc;
}

BackendDescriptor RemoteBackend::describe() { return cached_descriptor(); }

void RemoteBackend::refresh() {
  std::lock_guard lock(mu_);
  descriptor_.reset();
}

template <typename T, typename Call>
std::vector<T> RemoteBackend::batched(std::size_t count, Call&& call) {
  std::vector<T> out;
  if (count == 0) return out;
  out.reserve(count);
  const std::size_t limit = cached_descriptor().max_batch;
  const std::size_t chunk = limit == 0 ? count : limit;
  for (std::size_t begin = 0; begin < count; begin += chunk) {
    auto part = call(begin, std::min(count, begin + chunk));
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<EmbeddingVector> RemoteBackend::embed_text(std::span<const std::string> texts) {
  const auto desc = cached_descriptor();
  desc.require(Capability::EmbedText);
  return batched<EmbeddingVector>(texts.size(), [&](std::size_t b, std::size_t e) {
    Json body = {{"texts", std::vector<std::string>(texts.begin() + b, texts.begin() + e)}};
    return parse_vectors(post("/v1/embed_text", body).value("embeddings", Json()), e - b,
                         desc.embed_dim, "embed_text");
  });
}

std::vector<EmbeddingVector> RemoteBackend::embed_image(std::span<const Bytes> images) {
  const auto desc = cached_descriptor();
  desc.require(Capability::EmbedImage);
  return batched<EmbeddingVector>(images.size(), [&](std::size_t b, std::size_t e) {
    Json body = {{"images_png_b64", encode_images(images.subspan(b, e - b))}};
    return parse_vectors(post("/v1/embed_image", body).value("embeddings", Json()), e - b,
                         desc.embed_dim, "embed_image");
  });
}

std::vector<Bytes> RemoteBackend::generate(std::span<const StyleVector> styles) {
  const auto desc = cached_descriptor();
  desc.require(Capability::Generate);
  return batched<Bytes>(styles.size(), [&](std::size_t b, std::size_t e) {
    Json arr = Json::array();
    for (std::size_t i = b; i < e; ++i) {
      if (styles[i].size() != desc.style_dim) {
        throw Error(ErrorCode::DimensionMismatch, "style has " + std::to_string(styles[i].size()) +
                                                      " channels, backend expects " +
                                                      std::to_string(desc.style_dim));
      }
      arr.push_back(styles[i].values);
    }
    const Json res = post("/v1/generate", Json{{"styles", arr}});
    const Json& imgs = res.value("images_png_b64", Json());
    if (!imgs.is_array() || imgs.size() != e - b) {
      throw Error(ErrorCode::BackendFailure, "generate: image count mismatch");
    }
    return decode_images(imgs);
  });
}

std::vector<StyleVector> RemoteBackend::invert(std::span<const Bytes> images) {
  const auto desc = cached_descriptor();
  desc.require(Capability::Invert);
  return batched<StyleVector>(images.size(), [&](std::size_t b, std::size_t e) {
    Json body = {{"images_png_b64", encode_images(images.subspan(b, e - b))}};
    const auto vecs = parse_vectors(post("/v1/invert", body).value("styles", Json()), e - b,
                                    desc.style_dim, "invert");
    std::vector<StyleVector> out;
    out.reserve(vecs.size());
    for (const auto& v : vecs) out.push_back(StyleVector{v, desc.layer_offsets});
    return out;
  });
}

// ---------------------------------------------------------------------------

BackendServer::BackendServer(std::shared_ptr<Backend> backend)
    : backend_(std::move(backend)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

BackendServer::~BackendServer() { stop(); }

void BackendServer::install_routes() {
  const auto handle = [this](auto&& fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        const Json body = req.body.empty() ? Json::object() : Json::parse(req.body);
        res.set_content(fn(body).dump(), "application/json");
      } catch (const Error& e) {
        int status = 500;
        switch (e.code()) {
          case ErrorCode::CapabilityMissing:
          case ErrorCode::InversionUnsupported: status = 501; break;
          case ErrorCode::DecodeError:
          case ErrorCode::DimensionMismatch:
          case ErrorCode::InvalidArgument: status = 400; break;
          default: break;
        }
        res.status = status;
        res.set_content(error_body(e.code(), e.what()).dump(), "application/json");
      } catch (const Json::exception& e) {
        res.status = 400;
        res.set_content(error_body(ErrorCode::InvalidArgument, e.what()).dump(), "application/json");
      }
    };
  };

  server_->Post("/v1/describe", handle([this](const Json&) {
    return descriptor_to_json(backend_->describe());
  }));
  server_->Post("/v1/embed_text", handle([this](const Json& body) {
    const auto texts = body.at("texts").get<std::vector<std::string>>();
    return Json{{"embeddings", backend_->embed_text(std::span<const std::string>(texts))}};
  }));
  server_->Post("/v1/embed_image", handle([this](const Json& body) {
    const auto images = decode_images(body.at("images_png_b64"));
    return Json{{"embeddings", backend_->embed_image(images)}};
  }));
  server_->Post("/v1/generate", handle([this](const Json& body) {
    const auto offsets = backend_->describe().layer_offsets;
    std::vector<StyleVector> styles;
    for (const auto& s : body.at("styles")) styles.push_back({s.get<std::vector<float>>(), offsets});
    return Json{{"images_png_b64", encode_images(backend_->generate(styles))}};
  }));
  server_->Post("/v1/invert", handle([this](const Json& body) {
    const auto images = decode_images(body.at("images_png_b64"));
    Json styles = Json::array();
    for (const auto& s : backend_->invert(images)) styles.push_back(s.values);
    return Json{{"styles", styles}};
  }));
}

int BackendServer::start(const std::string& host, int port) {
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void BackendServer::listen(const std::string& host, int port) {
  port_ = port;
  if (!server_->listen(host, port)) {
    throw Error(ErrorCode::IoFailure, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void BackendServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace latent_edit
