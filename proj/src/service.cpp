// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/service.hpp"

#include <httplib.h>

#include <fstream>
#include <iterator>

#include "latent_edit/error.hpp"
#include "latent_edit/wire.hpp"

namespace latent_edit {
namespace {

constexpr const char* kImagePrefix = "/api/images/";

GridRange parse_range(const Json& body, const char* key, const GridRange& fallback) {
  if (!body.contains(key)) return fallback;
  const Json& v = body.at(key);
  if (v.is_string()) return GridRange::parse(v.get<std::string>());
  if (v.is_object()) {
    GridRange r{v.at("start").get<double>(), v.at("stop").get<double>(), v.at("step").get<double>()};
    if (!(r.step > 0.0) || r.values().empty()) {
      throw Error(ErrorCode::Usage, std::string(key) + " is empty or has a non-positive step");
    }
    return r;
  }
  throw Error(ErrorCode::Usage, std::string(key) + " must be \"start:stop:step\" or an object");
}

template <typename T>
T field(const Json& body, const char* key, T fallback) {
  if (!body.contains(key) || body.at(key).is_null()) return fallback;
  try {
    return body.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::Usage, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string DirectionKey::str() const {
  return Json::array({request.instruction, request.k, std::string(method_name(request.method)),
                      request.neutral, corpus_fingerprint, backend_fingerprint})
      .dump();
}

DirectionCache::DirectionCache(std::size_t capacity) : capacity_(capacity) {}

std::shared_ptr<const DirectionBundle> DirectionCache::get(const DirectionKey& key) {
  std::lock_guard lock(mu_);
  const auto it = index_.find(key.str());
  if (it == index_.end()) {
    ++misses_;
    return nullptr;
  }
  // The key embeds both fingerprints; checked again so a stale entry can
  // never be served even if keys were built inconsistently.
  if (it->second->corpus_fingerprint != key.corpus_fingerprint ||
      it->second->backend_fingerprint != key.backend_fingerprint) {
    order_.erase(it->second);
    index_.erase(it);
    ++misses_;
    return nullptr;
  }
  order_.splice(order_.begin(), order_, it->second);
  ++hits_;
  return it->second->value;
}

void DirectionCache::put(const DirectionKey& key, std::shared_ptr<const DirectionBundle> value) {
  if (capacity_ == 0) return;
  std::lock_guard lock(mu_);
  const std::string k = key.str();
  if (const auto it = index_.find(k); it != index_.end()) {
    order_.erase(it->second);
    index_.erase(it);
  }
  order_.push_front(Entry{k, key.corpus_fingerprint, key.backend_fingerprint, std::move(value)});
  index_.emplace(k, order_.begin());
  while (order_.size() > capacity_) {
    index_.erase(order_.back().key);
    order_.pop_back();
  }
}

std::size_t DirectionCache::invalidate_except(const std::string& corpus_fingerprint,
                                              const std::string& backend_fingerprint) {
  std::lock_guard lock(mu_);
  std::size_t dropped = 0;
  for (auto it = order_.begin(); it != order_.end();) {
    if (it->corpus_fingerprint != corpus_fingerprint || it->backend_fingerprint != backend_fingerprint) {
      index_.erase(it->key);
      it = order_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

std::size_t DirectionCache::size() const {
  std::lock_guard lock(mu_);
  return order_.size();
}

std::size_t DirectionCache::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

std::size_t DirectionCache::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

// ---------------------------------------------------------------------------

Service::Service(SessionState state, ServiceConfig config)
    : state_(std::move(state)), config_(config), cache_(config.cache_capacity) {
  if (!state_.backend) throw Error(ErrorCode::Usage, "service needs a backend");
}

int Service::http_status(ErrorCode code) noexcept {
  if (code == ErrorCode::UnknownId) return 404;
  switch (exit_code_for(code)) {
    case ExitCode::Divergence: return 409;
    case ExitCode::Backend: return 502;
    default: return 400;
  }
}

const ChannelDirectionMatrix& Service::channels() const {
  if (!state_.channels) throw Error(ErrorCode::Usage, "no channel directions loaded");
  return *state_.channels;
}

DirectionRequest Service::parse_direction_request(const Json& body) const {
  DirectionRequest req;
  req.instruction = field<std::string>(body, "text", "");
  req.method = parse_method(field<std::string>(body, "method", "svm"));
  req.neutral = field<std::string>(body, "neutral", "");
  const auto k = field<long long>(body, "k", static_cast<long long>(kDefaultRetrievalK));
  if (k <= 0) throw Error(ErrorCode::Usage, "k must be positive");
  req.k = static_cast<std::size_t>(k);
  validate(req);
  return req;
}

StyleVector Service::parse_source(const Json& body) {
  EditSource src;
  if (body.contains("image_b64") && !body["image_b64"].is_null()) {
    src.image = base64_decode(field<std::string>(body, "image_b64", ""));
  }
  if (body.contains("style") && !body["style"].is_null()) {
    src.style = StyleVector{field<std::vector<float>>(body, "style", {}), {}};
  }
  return resolve_source(src, *state_.backend);
}

std::pair<std::shared_ptr<const DirectionBundle>, bool> Service::direction(
    const DirectionRequest& request) {
  DirectionKey key{request, state_.corpus ? state_.corpus->fingerprint() : std::string(),
                   state_.backend->describe().fingerprint};
  cache_.invalidate_except(key.corpus_fingerprint, key.backend_fingerprint);
  if (auto hit = cache_.get(key)) return {hit, true};
  auto bundle = std::make_shared<const DirectionBundle>(
      compute_direction(request, state_.corpus.get(), *state_.backend));
  cache_.put(key, bundle);
  return {bundle, false};
}

Json Service::edit(const Json& body) {
  const DirectionRequest req = parse_direction_request(body);
  const double alpha = field<double>(body, "alpha", kDefaultAlpha);
  const double beta = field<double>(body, "beta", kDefaultBeta);
  validate_edit_params(alpha, beta);
  const StyleVector source = parse_source(body);

  const auto [bundle, hit] = direction(req);
  const StyleEditDirection mapped = map_direction(channels(), bundle->direction.delta_t, beta);
  const EditResult result =
      apply_edit(source, mapped, bundle->direction, alpha, *state_.backend, bundle->instruction_embedding);

  Json out = edit_report(result, alpha, beta);
  out["image_b64"] = base64_encode(result.edited_image);
  out["positives"] = scored_ids_to_json(result.text_direction.positives, kImagePrefix);
  out["negatives"] = scored_ids_to_json(result.text_direction.negatives, kImagePrefix);
  out["cache_hit"] = hit;
  return out;
}

Json Service::retrieve(const Json& body) {
  if (!state_.corpus) throw Error(ErrorCode::Usage, "no corpus index loaded");
  const std::string text = field<std::string>(body, "text", "");
  if (text.empty()) throw Error(ErrorCode::Usage, "text is empty");
  const auto k = field<long long>(body, "k", static_cast<long long>(kDefaultRetrievalK));
  const auto show = field<long long>(body, "show", 16);
  if (k <= 0) throw Error(ErrorCode::Usage, "k must be positive");
  if (show < 0 || show > k) throw Error(ErrorCode::Usage, "show must lie in [0, k]");

  state_.backend->describe().require(Capability::EmbedText);
  const EmbeddingVector query = state_.backend->embed_text(text);
  if (query.size() != state_.corpus->dim()) {
    throw Error(ErrorCode::DimensionMismatch, "text embedding dimension differs from the corpus");
  }
  const RetrievalPair pair = state_.corpus->retrieve_extremes(query, static_cast<std::size_t>(k));
  const auto n = static_cast<std::size_t>(show);
  return {{"text", text},
          {"k", k},
          {"corpus_size", state_.corpus->size()},
          {"positives", scored_ids_to_json(std::span(pair.most_similar).first(n), kImagePrefix)},
          {"negatives", scored_ids_to_json(std::span(pair.least_similar).first(n), kImagePrefix)}};
}

Json Service::sweep(const Json& body) {
  const DirectionRequest req = parse_direction_request(body);
  const GridRange alphas = parse_range(body, "alpha_range", GridRange{2.0, 6.0, 0.5});
  const GridRange betas = parse_range(body, "beta_range", GridRange{0.1, 0.2, 0.05});
  const StyleVector source = parse_source(body);

  const auto [bundle, hit] = direction(req);
  if (!bundle->instruction_embedding) {
    throw Error(ErrorCode::CapabilityMissing, "sweep needs a backend that embeds text and images");
  }
  const SweepResult result = latent_edit::sweep(channels(), bundle->direction, source,
                                                *bundle->instruction_embedding, alphas, betas,
                                                *state_.backend, config_.sweep_in_flight);
  Json out = sweep_to_json(result);
  out["cache_hit"] = hit;
  return out;
}

Json Service::health() {
  const BackendDescriptor desc = state_.backend->describe();
  Json out = {{"status", "ok"}, {"backend", descriptor_to_json(desc)}};
  out["corpus"] = state_.corpus ? Json{{"size", state_.corpus->size()},
                                        {"dim", state_.corpus->dim()},
                                        {"fingerprint", state_.corpus->fingerprint()}}
                                 : Json(nullptr);
  out["channels"] = state_.channels
                        ? Json{{"channels", state_.channels->channels()},
                               {"dim", state_.channels->dim()},
                               {"fingerprint", state_.channels->fingerprint()},
                               {"backend_fingerprint", state_.channels->backend_fingerprint},
                               {"fingerprint_match",
                                state_.channels->backend_fingerprint == desc.fingerprint}}
                        : Json(nullptr);
  out["cache"] = {{"size", cache_.size()}, {"hits", cache_.hits()}, {"misses", cache_.misses()}};
  return out;
}

Bytes Service::image(const std::string& id) {
  if (!state_.corpus || !state_.corpus->find(id)) {
    throw Error(ErrorCode::UnknownId, "no corpus image '" + id + "'");
  }
  const auto& paths = state_.corpus->metadata().image_paths;
  const auto it = paths.find(id);
  if (it == paths.end()) throw Error(ErrorCode::UnknownId, "no image file recorded for '" + id + "'");
  std::ifstream in(it->second, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnknownId, "image file for '" + id + "' is missing");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------

HttpServer::HttpServer(std::shared_ptr<Service> service, std::string cors_origin)
    : service_(std::move(service)),
      cors_origin_(std::move(cors_origin)),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  server_->set_default_headers({{"Access-Control-Allow-Origin", cors_origin_},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
  server_->Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  const auto fail = [](httplib::Response& res, ErrorCode code, const std::string& message) {
    res.status = Service::http_status(code);
    res.set_content(error_body(code, message).dump(), "application/json");
  };
  const auto json_route = [this, fail](Json (Service::*fn)(const Json&)) {
    return [this, fail, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        Json body = req.body.empty() ? Json::object() : Json::parse(req.body);
        if (!body.is_object()) throw Error(ErrorCode::Usage, "request body must be a JSON object");
        res.set_content(((*service_).*fn)(body).dump(), "application/json");
      } catch (const Error& e) {
        fail(res, e.code(), e.what());
      } catch (const Json::exception& e) {
        fail(res, ErrorCode::Usage, std::string("malformed request: ") + e.what());
      }
    };
  };

  server_->Post("/api/edit", json_route(&Service::edit));
  server_->Post("/api/retrieve", json_route(&Service::retrieve));
  server_->Post("/api/sweep", json_route(&Service::sweep));
  server_->Get("/api/health", [this, fail](const httplib::Request&, httplib::Response& res) {
    try {
      res.set_content(service_->health().dump(), "application/json");
    } catch (const Error& e) {
      fail(res, e.code(), e.what());
    }
  });
  server_->Get(R"(/api/images/(.+))", [this, fail](const httplib::Request& req, httplib::Response& res) {
    try {
      const Bytes png = service_->image(req.matches[1].str());
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    } catch (const Error& e) {
      fail(res, e.code(), e.what());
    }
  });
}

int HttpServer::start(const std::string& host, int port) {
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpServer::listen(const std::string& host, int port) {
  port_ = port;
  if (!server_->listen(host, port)) {
    throw Error(ErrorCode::IoFailure, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace latent_edit
