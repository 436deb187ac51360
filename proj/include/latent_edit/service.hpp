// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>

#include "latent_edit/pipeline.hpp"

namespace httplib {
class Server;
}

namespace latent_edit {

/// Direction cache key. Fingerprints are part of the key so entries computed
/// against another corpus or backend are never returned.
struct DirectionKey {
  DirectionRequest request;
  std::string corpus_fingerprint;
  std::string backend_fingerprint;

  std::string str() const;
};

/// LRU cache of computed directions, safe for concurrent use.
class DirectionCache {
 public:
  explicit DirectionCache(std::size_t capacity);

  std::shared_ptr<const DirectionBundle> get(const DirectionKey& key);
  void put(const DirectionKey& key, std::shared_ptr<const DirectionBundle> value);
  /// Drops entries whose fingerprints differ from the given ones.
  std::size_t invalidate_except(const std::string& corpus_fingerprint,
                                const std::string& backend_fingerprint);
  std::size_t size() const;
  std::size_t hits() const;
  std::size_t misses() const;

 private:
  struct Entry {
    std::string key;
    std::string corpus_fingerprint;
    std::string backend_fingerprint;
    std::shared_ptr<const DirectionBundle> value;
  };

  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> order_;  // most recent first
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

struct ServiceConfig {
  std::size_t cache_capacity = 64;
  std::size_t sweep_in_flight = 4;
  std::string cors_origin = "*";
};

/// Loaded artifacts plus the shared backend handle. The corpus is optional
/// (baseline edits do not need it); channel directions are needed for edits.
struct SessionState {
  std::shared_ptr<const CorpusIndex> corpus;
  std::shared_ptr<const ChannelDirectionMatrix> channels;
  std::shared_ptr<Backend> backend;
};

struct EditOutcome {
  EditResult result;
  bool cache_hit = false;
};

/// Request handling independent of HTTP; every handler takes and returns
/// JSON and throws Error on failure.
class Service {
 public:
  Service(SessionState state, ServiceConfig config = {});

  Json edit(const Json& body);
  Json retrieve(const Json& body);
  Json sweep(const Json& body);
  Json health();
  /// PNG bytes for a corpus id; UnknownId when there is no such image.
  Bytes image(const std::string& id);

  DirectionCache& cache() noexcept { return cache_; }
  const SessionState& state() const noexcept { return state_; }

  /// HTTP status for an error: 400 usage/format, 409 divergence, 502 backend,
  /// 404 unknown image.
  static int http_status(ErrorCode code) noexcept;

 private:
  std::pair<std::shared_ptr<const DirectionBundle>, bool> direction(const DirectionRequest& request);
  DirectionRequest parse_direction_request(const Json& body) const;
  StyleVector parse_source(const Json& body);
  const ChannelDirectionMatrix& channels() const;

  SessionState state_;
  ServiceConfig config_;
  DirectionCache cache_;
};

/// Serves a Service over HTTP on /api/*.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<Service> service, std::string cors_origin = "*");
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  int start(const std::string& host = "127.0.0.1", int port = 0);
  void listen(const std::string& host, int port);
  void stop();
  int port() const noexcept { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  void install_routes();

  std::shared_ptr<Service> service_;
  std::string cors_origin_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace latent_edit
