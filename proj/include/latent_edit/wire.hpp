// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "latent_edit/backend.hpp"
#include "latent_edit/embedding_file.hpp"
#include "latent_edit/error.hpp"

namespace httplib {
class Server;
}

namespace latent_edit {

// JSON shapes shared by client and server.
Json descriptor_to_json(const BackendDescriptor& desc);
BackendDescriptor descriptor_from_json(const Json& j);
Json error_body(ErrorCode code, const std::string& message);
std::optional<ErrorCode> error_code_from_name(std::string_view name);

struct RemoteBackendOptions {
  std::chrono::milliseconds timeout{30000};
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{50};
};

/// Client for the /v1/* wire protocol. Every call is idempotent and retried
/// with exponential backoff on transport errors and 5xx responses. Responses
/// are checked against the descriptor's dimensions.
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(std::string base_url, RemoteBackendOptions options = {});

  BackendDescriptor describe() override;
  std::vector<EmbeddingVector> embed_text(std::span<const std::string> texts) override;
  std::vector<EmbeddingVector> embed_image(std::span<const Bytes> images) override;
  std::vector<Bytes> generate(std::span<const StyleVector> styles) override;
  std::vector<StyleVector> invert(std::span<const Bytes> images) override;
  using Backend::embed_text;

  /// Drops the cached descriptor so the next call re-fetches it.
  void refresh();
  const std::string& base_url() const noexcept { return base_url_; }

 private:
  Json post(const std::string& path, const Json& body);
  BackendDescriptor cached_descriptor();
  template <typename T, typename Call>
  std::vector<T> batched(std::size_t count, Call&& call);

  std::string base_url_;
  RemoteBackendOptions options_;
  std::mutex mu_;
  std::optional<BackendDescriptor> descriptor_;
};

/// Serves a Backend over the /v1/* wire protocol.
class BackendServer {
 public:
  explicit BackendServer(std::shared_ptr<Backend> backend);
  ~BackendServer();
  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks serving on the calling thread.
  void listen(const std::string& host, int port);
  void stop();
  int port() const noexcept { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  void install_routes();

  std::shared_ptr<Backend> backend_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace latent_edit
