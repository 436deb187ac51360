// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/wire.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <functional>
#include <thread>

#include "latent_edit/synthetic_backend.hpp"
#include "test_util.hpp"

namespace latent_edit {
namespace {

using testing::code_of;

RemoteBackendOptions fast_retry() {
  RemoteBackendOptions opt;
  opt.timeout = std::chrono::seconds(5);
  opt.initial_backoff = std::chrono::milliseconds(1);
  return opt;
}

/// Local httplib server with hand-written handlers for fault injection.
class MockServer {
 public:
  MockServer() = default;
  ~MockServer() {
    server.stop();
    if (thread_.joinable()) thread_.join();
  }
  std::string start() {
    const int port = server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
    return "http://127.0.0.1:" + std::to_string(port);
  }
  httplib::Server server;

 private:
  std::thread thread_;
};

Json descriptor_json(std::size_t embed_dim = 4, std::size_t style_dim = 2, std::size_t max_batch = 0) {
  BackendDescriptor d;
  d.name = "mock";
  d.embed_dim = embed_dim;
  d.style_dim = style_dim;
  d.capabilities = kAllCapabilities;
  d.fingerprint = "mockfp";
  d.max_batch = max_batch;
  return descriptor_to_json(d);
}

void reply(httplib::Response& res, const Json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

// Conformance: the same assertions against an in-process backend and the
// same backend behind the HTTP protocol.
struct Fixture {
  std::shared_ptr<SyntheticBackend> synthetic;
  std::unique_ptr<BackendServer> server;
  std::shared_ptr<Backend> backend;
};

Fixture make_fixture(bool remote, SyntheticBackendConfig cfg = {}) {
  Fixture f;
  f.synthetic = std::make_shared<SyntheticBackend>(std::move(cfg));
  if (!remote) {
    f.backend = f.synthetic;
    return f;
  }
  f.server = std::make_unique<BackendServer>(f.synthetic);
  f.server->start();
  f.backend = std::make_shared<RemoteBackend>(f.server->url(), fast_retry());
  return f;
}

class Conformance : public ::testing::TestWithParam<bool> {};

TEST_P(Conformance, DescribeMatches) {
  auto f = make_fixture(GetParam());
  EXPECT_EQ(f.backend->describe(), f.synthetic->describe());
}

TEST_P(Conformance, EmbedTextMatchesInProcess) {
  auto f = make_fixture(GetParam());
  const std::vector<std::string> texts{"smile", "an old man", "", "zzz qqq"};
  EXPECT_EQ(f.backend->embed_text(texts), f.synthetic->embed_text(texts));
}

TEST_P(Conformance, GenerateEmbedInvertRoundTrip) {
  auto f = make_fixture(GetParam());
  const auto styles = f.synthetic->sample_styles(7, 2);
  const auto images = f.backend->generate(styles);
  ASSERT_EQ(images.size(), 7U);
  EXPECT_EQ(f.backend->invert(images), styles);
  EXPECT_EQ(f.backend->embed_image(images), f.synthetic->embed_image(images));
}

TEST_P(Conformance, EmptyAndLargeBatches) {
  auto f = make_fixture(GetParam());
  EXPECT_TRUE(f.backend->generate({}).empty());
  EXPECT_TRUE(f.backend->embed_image({}).empty());
  const auto styles = f.synthetic->sample_styles(200, 3);
  const auto images = f.backend->generate(styles);
  EXPECT_EQ(f.backend->embed_image(images).size(), 200U);
}

TEST_P(Conformance, MaxBatchIsHonoured) {
  SyntheticBackendConfig cfg;
  cfg.max_batch = 16;
  auto f = make_fixture(GetParam(), cfg);
  const auto styles = f.synthetic->sample_styles(50, 4);
  EXPECT_EQ(f.backend->invert(f.backend->generate(styles)), styles);
}

TEST_P(Conformance, ErrorsKeepTheirCodes) {
  SyntheticBackendConfig cfg;
  cfg.capabilities = kAllCapabilities & ~static_cast<std::uint32_t>(Capability::Invert);
  auto f = make_fixture(GetParam(), cfg);
  const auto images = f.backend->generate(f.synthetic->sample_styles(1, 5));
  EXPECT_EQ(code_of([&] { f.backend->invert(images); }), ErrorCode::InversionUnsupported);
  const std::vector<Bytes> junk{Bytes{1, 2, 3}};
  EXPECT_EQ(code_of([&] { f.backend->embed_image(junk); }), ErrorCode::DecodeError);
  const std::vector<StyleVector> short_style{StyleVector{{1.0F}, {}}};
  EXPECT_EQ(code_of([&] { f.backend->generate(short_style); }), ErrorCode::DimensionMismatch);
}

INSTANTIATE_TEST_SUITE_P(Backends, Conformance, ::testing::Values(false, true),
                         [](const auto& info) { return info.param ? "Remote" : "InProcess"; });

TEST(Descriptor, JsonRoundTrip) {
  SyntheticBackend backend;
  const auto d = backend.describe();
  const Json j = descriptor_to_json(d);
  EXPECT_EQ(j.at("capabilities"), Json({"embed_text", "embed_image", "generate", "invert"}));
  EXPECT_EQ(descriptor_from_json(j), d);
  Json zero = j;
  zero["embed_dim"] = 0;
  EXPECT_EQ(code_of([&] { descriptor_from_json(zero); }), ErrorCode::BackendFailure);
  EXPECT_EQ(code_of([&] { descriptor_from_json(Json{{"name", "x"}}); }), ErrorCode::BackendFailure);
}

TEST(ErrorBody, NamesRoundTrip) {
  const Json body = error_body(ErrorCode::KTooLarge, "too big");
  EXPECT_EQ(body["error"]["code"], "KTooLarge");
  EXPECT_EQ(body["error"]["exit_code"], 2);
  EXPECT_EQ(body["error"]["message"], "too big");
  EXPECT_EQ(error_code_from_name("FingerprintMismatch"), ErrorCode::FingerprintMismatch);
  EXPECT_EQ(error_code_from_name("BadMagic"), ErrorCode::BadMagic);
  EXPECT_FALSE(error_code_from_name("Nope").has_value());
}

TEST(RemoteBackend, WrongDimensionIsRejected) {
  MockServer mock;
  mock.server.Post("/v1/describe", [](const auto&, auto& res) { reply(res, descriptor_json(4)); });
  mock.server.Post("/v1/embed_text", [](const httplib::Request& req, httplib::Response& res) {
    const auto n = Json::parse(req.body).at("texts").size();
    reply(res, Json{{"embeddings", std::vector<std::vector<float>>(n, std::vector<float>(3, 0.5F))}});
  });
  RemoteBackend backend(mock.start(), fast_retry());
  EXPECT_EQ(code_of([&] { backend.embed_text("x"); }), ErrorCode::DimensionMismatch);
}

TEST(RemoteBackend, WrongCountIsRejected) {
  MockServer mock;
  mock.server.Post("/v1/describe", [](const auto&, auto& res) { reply(res, descriptor_json(2)); });
  mock.server.Post("/v1/embed_text", [](const auto&, auto& res) {
    reply(res, Json{{"embeddings", Json::array()}});
  });
  RemoteBackend backend(mock.start(), fast_retry());
  EXPECT_EQ(code_of([&] { backend.embed_text("x"); }), ErrorCode::BackendFailure);
}

TEST(RemoteBackend, RetriesTransientServerErrors) {
  MockServer mock;
  std::atomic<int> calls{0};
  mock.server.Post("/v1/describe", [](const auto&, auto& res) { reply(res, descriptor_json(2)); });
  mock.server.Post("/v1/embed_text", [&](const auto&, auto& res) {
    if (++calls < 3) {
      res.status = 503;
      res.set_content("busy", "text/plain");
      return;
    }
    reply(res, Json{{"embeddings", {{1.0, 2.0}}}});
  });
  RemoteBackend backend(mock.start(), fast_retry());
  EXPECT_EQ(backend.embed_text("x"), (EmbeddingVector{1.0F, 2.0F}));
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteBackend, GivesUpAfterMaxAttempts) {
  MockServer mock;
  std::atomic<int> calls{0};
  mock.server.Post("/v1/describe", [&](const auto&, auto& res) {
    ++calls;
    reply(res, Json{{"error", {{"message", "down"}}}}, 500);
  });
  RemoteBackend backend(mock.start(), fast_retry());
  EXPECT_EQ(code_of([&] { backend.describe(); }), ErrorCode::BackendFailure);
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteBackend, TypedErrorsAreNotRetried) {
  MockServer mock;
  std::atomic<int> calls{0};
  mock.server.Post("/v1/describe", [](const auto&, auto& res) { reply(res, descriptor_json(2)); });
  mock.server.Post("/v1/generate", [&](const auto&, auto& res) {
    ++calls;
    reply(res, error_body(ErrorCode::NonFinite, "style has NaN"), 500);
  });
  RemoteBackend backend(mock.start(), fast_retry());
  const std::vector<StyleVector> s{StyleVector{{1.0F, 2.0F}, {}}};
  EXPECT_EQ(code_of([&] { backend.generate(s); }), ErrorCode::NonFinite);
  EXPECT_EQ(calls.load(), 1);
}

TEST(RemoteBackend, DescriptorIsCachedUntilRefresh) {
  MockServer mock;
  std::atomic<int> calls{0};
  mock.server.Post("/v1/describe", [&](const auto&, auto& res) {
    ++calls;
    reply(res, descriptor_json(2));
  });
  RemoteBackend backend(mock.start() + "/", fast_retry());
  backend.describe();
  backend.describe();
  EXPECT_EQ(calls.load(), 1);
  backend.refresh();
  backend.describe();
  EXPECT_EQ(calls.load(), 2);
}

TEST(RemoteBackend, UnreachableServer) {
  RemoteBackendOptions opt = fast_retry();
  opt.max_attempts = 2;
  opt.timeout = std::chrono::seconds(1);
  RemoteBackend backend("http://127.0.0.1:1", opt);
  EXPECT_EQ(code_of([&] { backend.describe(); }), ErrorCode::BackendFailure);
}

TEST(BackendServer, MalformedRequestIs400) {
  BackendServer server(std::make_shared<SyntheticBackend>());
  server.start();
  httplib::Client client(server.url());
  const auto res = client.Post("/v1/embed_text", "{\"nope\": 1}", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(Json::parse(res->body)["error"]["code"], "InvalidArgument");
}

}  // namespace
}  // namespace latent_edit
