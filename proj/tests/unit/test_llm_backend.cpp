// SPDX-License-Identifier: Apache-2.0
#include "minagent/llm_backend.hpp"

#include <doctest.h>

#include <numeric>

#include "minagent/mock_server.hpp"
#include "minagent/trajectory.hpp"
#include "support/helpers.hpp"

using namespace minagent;
using minagent::testing::TempDir;
using nlohmann::json;

namespace {

ChatRequest simple_request(const std::string& task = "do it") {
  ChatRequest req;
  req.model = "m";
  req.messages = {{Role::System, "s", {}, std::nullopt}, {Role::User, task, {}, std::nullopt}};
  return req;
}

BackendConfig fast_config(const std::string& base_url) {
  BackendConfig config;
  config.base_url = base_url;
  config.api_key = "k-unit";
  config.timeout = std::chrono::seconds(5);
  config.retry.max_attempts = 3;
  config.retry.backoff = {std::chrono::milliseconds(1), std::chrono::milliseconds(1)};
  return config;
}

}  // namespace

TEST_CASE("one scripted stop response means exactly one request") {
  MockServer server(Script::parse(
      json{{"on_exhausted", "error_500"},
           {"steps", json::array({json{{"response", minagent::testing::wire_stop("hello")}}})}}));
  int port = server.start(0);

  HttpBackend backend(fast_config("http://127.0.0.1:" + std::to_string(port)));
  auto result = backend.complete(simple_request());
  CHECK(result.response.message.content == "hello");
  CHECK(result.response.finish_reason == FinishReason::Stop);

  RequestLog log = server.stop();
  REQUIRE(log.entries.size() == 1);
  CHECK(log.entries[0].authorization == "Bearer k-unit");
}

TEST_CASE("500 twice then 200 succeeds on attempt 3, log shows 3 requests") {
  MockServer server(Script::parse(
      json{{"on_exhausted", "error_500"},
           {"steps", json::array({json{{"repeat", 2}, {"status", 500}, {"body", "flaky"}},
                                  json{{"response", minagent::testing::wire_stop("ok")}}})}}));
  int port = server.start(0);

  HttpBackend backend(fast_config("http://127.0.0.1:" + std::to_string(port)));
  std::vector<std::chrono::milliseconds> slept;
  backend.set_sleep_hook([&](std::chrono::milliseconds d) { slept.push_back(d); });

  auto result = backend.complete(simple_request());
  CHECK(result.response.message.content == "ok");

  RequestLog log = server.stop();
  CHECK(log.entries.size() == 3);
  // Sum of sleeps equals the consumed backoff prefix.
  CHECK(slept == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1),
                                                        std::chrono::milliseconds(1)});
}

TEST_CASE("a 401 is terminal: no retry, one request") {
  MockServer server(Script::parse(
      json{{"on_exhausted", "error_500"},
           {"steps", json::array({json{{"repeat", 5}, {"status", 401}, {"body", "no"}}})}}));
  int port = server.start(0);

  HttpBackend backend(fast_config("http://127.0.0.1:" + std::to_string(port)));
  try {
    backend.complete(simple_request());
    FAIL("expected BackendError");
  } catch (const BackendError& ex) {
    CHECK(ex.kind == BackendError::Kind::Terminal);
    CHECK(ex.status == 401);
    CHECK(ex.attempts == 1);
  }
  RequestLog log = server.stop();
  CHECK(log.entries.size() == 1);
}

TEST_CASE("persistent 5xx exhausts the retry budget, attempts never exceed it") {
  MockServer server(Script::parse(
      json{{"on_exhausted", "error_500"},
           {"steps", json::array({json{{"repeat", 10}, {"status", 503}, {"body", "down"}}})}}));
  int port = server.start(0);

  auto config = fast_config("http://127.0.0.1:" + std::to_string(port));
  config.retry.max_attempts = 2;
  config.retry.backoff = {std::chrono::milliseconds(1)};
  HttpBackend backend(config);
  try {
    backend.complete(simple_request());
    FAIL("expected BackendError");
  } catch (const BackendError& ex) {
    CHECK(ex.kind == BackendError::Kind::Exhausted);
    CHECK(ex.attempts == 2);
  }
  CHECK(server.stop().entries.size() == 2);
}

TEST_CASE("a 2xx body that fails to decode is a DecodeFailure, not a retry") {
  MockServer server(Script::parse(
      json{{"on_exhausted", "error_500"},
           {"steps", json::array({json{{"status", 200}, {"body", "not json"}},
                                  json{{"response", minagent::testing::wire_stop("later")}}})}}));
  int port = server.start(0);
  HttpBackend backend(fast_config("http://127.0.0.1:" + std::to_string(port)));
  try {
    backend.complete(simple_request());
    FAIL("expected BackendError");
  } catch (const BackendError& ex) {
    CHECK(ex.kind == BackendError::Kind::Decode);
  }
  CHECK(server.stop().entries.size() == 1);
}

TEST_CASE("a connection-refused endpoint exhausts retries as network errors") {
  // Bind then release a port so nothing listens on it.
  int dead_port;
  {
    MockServer probe(Script::parse(json{{"on_exhausted", {{"final_stop", "x"}}}}));
    dead_port = probe.start(0);
    probe.stop();
  }
  auto config = fast_config("http://127.0.0.1:" + std::to_string(dead_port));
  config.retry.max_attempts = 2;
  config.retry.backoff = {std::chrono::milliseconds(1)};
  HttpBackend backend(config);
  try {
    backend.complete(simple_request());
    FAIL("expected BackendError");
  } catch (const BackendError& ex) {
    CHECK(ex.kind == BackendError::Kind::Exhausted);
    CHECK(std::string(ex.what()).find("network error") != std::string::npos);
  }
}

TEST_CASE("base_url path prefixes are honored") {
  // The mock server only serves /chat/completions, so a prefixed base_url
  // must produce a 404, proving the prefix reached the wire.
  MockServer server(Script::parse(json{{"on_exhausted", {{"final_stop", "x"}}}}));
  int port = server.start(0);
  auto config = fast_config("http://127.0.0.1:" + std::to_string(port) + "/v1");
  config.retry.max_attempts = 1;
  config.retry.backoff.clear();
  HttpBackend backend(config);
  try {
    backend.complete(simple_request());
    FAIL("expected BackendError");
  } catch (const BackendError& ex) {
    CHECK(ex.kind == BackendError::Kind::Terminal);
    CHECK(ex.status == 404);
  }
  server.stop();
}

TEST_CASE("retry policy invariants are enforced at construction") {
  BackendConfig config;
  config.base_url = "http://127.0.0.1:1";
  config.retry.max_attempts = 3;
  config.retry.backoff = {std::chrono::milliseconds(1)};  // too short
  CHECK_THROWS_AS(HttpBackend{config}, std::invalid_argument);

  config.base_url = "";
  CHECK_THROWS_AS(HttpBackend{config}, std::invalid_argument);
}

TEST_CASE("replay returns canned responses and checks digests") {
  ChatRequest req = simple_request("task A");
  std::string body = minagent::testing::wire_stop("canned").dump();

  SUBCASE("matching digest") {
    ReplayBackend replay({{request_digest(req), body}});
    auto result = replay.complete(req);
    CHECK(result.response.message.content == "canned");
    CHECK(result.raw_body == body);
  }
  SUBCASE("second call is ReplayExhausted") {
    ReplayBackend replay({{request_digest(req), body}});
    replay.complete(req);
    try {
      replay.complete(req);
      FAIL("expected BackendError");
    } catch (const BackendError& ex) {
      CHECK(ex.kind == BackendError::Kind::ReplayExhausted);
    }
  }
  SUBCASE("different task text is a ReplayMismatch") {
    ReplayBackend replay({{request_digest(req), body}});
    ChatRequest other = simple_request("task B");
    try {
      replay.complete(other);
      FAIL("expected BackendError");
    } catch (const BackendError& ex) {
      CHECK(ex.kind == BackendError::Kind::ReplayMismatch);
      CHECK(std::string(ex.what()).find("position 0") != std::string::npos);
    }
  }
  SUBCASE("an empty digest disables the check") {
    ReplayBackend replay({{"", body}});
    CHECK(replay.complete(simple_request("anything")).response.message.content == "canned");
  }
}

TEST_CASE("round-trip through the wire: the mock server's recorded body decodes to the "
          "original request") {
  MockServer server(Script::parse(json{{"on_exhausted", {{"final_stop", "ok"}}}}));
  int port = server.start(0);
  HttpBackend backend(fast_config("http://127.0.0.1:" + std::to_string(port)));

  std::vector<ChatRequest> sent;
  for (int i = 0; i < 10; ++i) {
    ChatRequest req = simple_request("task " + std::to_string(i));
    if (i % 2) {
      req.messages.push_back({Role::Assistant,
                              std::nullopt,
                              {{"c" + std::to_string(i), "list_files", "{}"}},
                              std::nullopt});
      req.messages.push_back({Role::Tool, "(empty)", {}, "c" + std::to_string(i)});
    }
    if (i % 3 == 0) {
      req.tools.push_back({"t", "a tool", json{{"type", "object"},
                                               {"properties", json::object()},
                                               {"required", json::array()}}});
    }
    backend.complete(req);
    sent.push_back(std::move(req));
  }
  RequestLog log = server.stop();
  REQUIRE(log.entries.size() == sent.size());
  for (std::size_t i = 0; i < sent.size(); ++i) {
    CAPTURE(i);
    REQUIRE(log.entries[i].request.has_value());
    REQUIRE(*log.entries[i].request == sent[i]);
  }
}

TEST_CASE("a replay source built from a trajectory file pairs request and response events") {
  TempDir dir;
  auto file = dir.path() / "run.traj.jsonl";
  ChatRequest req = simple_request();
  std::string req_body = encode_request(req);
  std::string res_body = minagent::testing::wire_stop("from-file").dump();
  {
    TrajectorySink sink(file);
    sink.append_now(EventKind::RunStart, json::object());
    sink.append_now(EventKind::Request, {{"body", req_body}});
    sink.append_now(EventKind::Response, {{"body", res_body}});
    sink.append_now(EventKind::RunEnd, json::object());
  }
  ReplayBackend replay = ReplayBackend::from_trajectory(file);
  auto result = replay.complete(req);
  CHECK(result.raw_body == res_body);
  CHECK(replay.remaining() == 0);
}
