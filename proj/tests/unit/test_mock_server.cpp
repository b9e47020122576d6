// SPDX-License-Identifier: Apache-2.0
#include "minagent/mock_server.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

#include "support/helpers.hpp"

using namespace minagent;
using minagent::testing::TempDir;
using nlohmann::json;

namespace {

httplib::Result post_chat(int port, const std::string& body,
                          const std::string& auth = "Bearer k") {
  httplib::Client client("http://127.0.0.1:" + std::to_string(port));
  return client.Post("/chat/completions", {{"Authorization", auth}}, body, "application/json");
}

const std::string kWellFormedRequest =
    R"({"model":"m","messages":[{"role":"system","content":"s"},{"role":"user","content":"u"}],"tools":[]})";

}  // namespace

TEST_CASE("load_script parses steps, repeats and exhaustion policy") {
  TempDir dir;
  auto file = dir.write_file("s.script.json", R"({
    "on_exhausted": {"final_stop": "bye"},
    "steps": [
      {"repeat": 2, "status": 500, "body": "boom"},
      {"response": {"model":"m","choices":[{"message":{"role":"assistant","content":"hi"},"finish_reason":"stop"}]}}
    ]})");
  Script script = Script::load_file(file);
  REQUIRE(script.steps.size() == 2);
  CHECK(script.steps[0].repeat == 2);
  CHECK(script.steps[0].status == 500);
  CHECK(script.steps[1].response.has_value());
  CHECK(script.on_exhausted == Script::OnExhausted::FinalStop);
  CHECK(script.final_stop_text == "bye");
}

TEST_CASE("an empty script with error_500 exhaustion violates the invariant") {
  CHECK_THROWS_AS(Script::parse(json{{"on_exhausted", "error_500"}}), ScriptError);
  CHECK_THROWS_AS(Script::parse(json::parse(R"({"steps":[]})")), ScriptError);
  // but an empty script with final_stop is legal
  CHECK_NOTHROW(Script::parse(json{{"on_exhausted", {{"final_stop", "ok"}}}}));
}

TEST_CASE("load_script reports the line of a parse error") {
  TempDir dir;
  auto file = dir.write_file("bad.script.json", "{\n  \"steps\": [\n    oops\n  ]\n}\n");
  try {
    Script::load_file(file);
    FAIL("expected ScriptError");
  } catch (const ScriptError& ex) {
    CHECK(std::string(ex.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("serve answers scripted responses in order and logs every request") {
  Script script = Script::parse(json{
      {"on_exhausted", "error_500"},
      {"steps", json::array({json{{"response", minagent::testing::wire_stop("hi")}}})}});
  MockServer server(std::move(script));
  int port = server.start(0);

  auto res = post_chat(port, kWellFormedRequest);
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["choices"][0]["message"]["content"] == "hi");

  auto second = post_chat(port, kWellFormedRequest);
  REQUIRE(second);
  CHECK(second->status == 500);
  CHECK(second->body == "script exhausted");

  RequestLog log = server.stop();
  REQUIRE(log.entries.size() == 2);
  CHECK(log.entries[0].index == 0);
  CHECK(log.entries[1].index == 1);
  CHECK(log.entries[0].authorization == "Bearer k");
  REQUIRE(log.entries[0].request.has_value());
  CHECK(log.entries[0].request->model == "m");
  CHECK(log.entries[0].decode_error.empty());
}

TEST_CASE("responses depend only on arrival order, not request content") {
  Script script = Script::parse(json{
      {"on_exhausted", {{"final_stop", "tail"}}},
      {"steps", json::array({json{{"response", minagent::testing::wire_stop("first")}},
                             json{{"response", minagent::testing::wire_stop("second")}}})}});
  MockServer server(std::move(script));
  int port = server.start(0);

  // Wildly different bodies still get the scripted order.
  auto a = post_chat(port, "garbage that is not json");
  auto b = post_chat(port, kWellFormedRequest);
  auto c = post_chat(port, "{}");
  REQUIRE((a && b && c));
  CHECK(json::parse(a->body)["choices"][0]["message"]["content"] == "first");
  CHECK(json::parse(b->body)["choices"][0]["message"]["content"] == "second");
  CHECK(json::parse(c->body)["choices"][0]["message"]["content"] == "tail");

  RequestLog log = server.stop();
  REQUIRE(log.entries.size() == 3);
  CHECK_FALSE(log.entries[0].decode_error.empty());  // garbage logged, not rejected
  CHECK(log.entries[0].request == std::nullopt);
}

TEST_CASE("final_stop echoes the requesting model id") {
  Script script = Script::parse(json{{"on_exhausted", {{"final_stop", "done"}}}});
  MockServer server(std::move(script));
  int port = server.start(0);
  auto res = post_chat(port, kWellFormedRequest);
  REQUIRE(res);
  CHECK(json::parse(res->body)["model"] == "m");
  server.stop();
}

TEST_CASE("other paths get a 404") {
  Script script = Script::parse(json{{"on_exhausted", {{"final_stop", "x"}}}});
  MockServer server(std::move(script));
  int port = server.start(0);
  httplib::Client client("http://127.0.0.1:" + std::to_string(port));
  auto res = client.Post("/v1/other", "{}", "application/json");
  REQUIRE(res);
  CHECK(res->status == 404);
  auto get = client.Get("/chat/completions");
  REQUIRE(get);
  CHECK(get->status == 404);
  server.stop();
}

TEST_CASE("a global cursor spans sequential clients") {
  Script script = Script::parse(json{
      {"on_exhausted", "error_500"},
      {"steps", json::array({json{{"response", minagent::testing::wire_stop("one")}},
                             json{{"response", minagent::testing::wire_stop("two")}}})}});
  MockServer server(std::move(script));
  int port = server.start(0);

  // Two distinct "runs": the second run's first request gets step 2.
  auto run1 = post_chat(port, kWellFormedRequest);
  auto run2 = post_chat(port, kWellFormedRequest);
  REQUIRE((run1 && run2));
  CHECK(json::parse(run1->body)["choices"][0]["message"]["content"] == "one");
  CHECK(json::parse(run2->body)["choices"][0]["message"]["content"] == "two");
  server.stop();
}

TEST_CASE("concurrent requests serialize into dense arrival indices") {
  Script script = Script::parse(json{{"on_exhausted", {{"final_stop", "ok"}}}});
  MockServer server(std::move(script));
  int port = server.start(0);

  constexpr int kThreads = 8;
  std::vector<std::thread> workers;
  std::atomic<int> failures{0};
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < 5; ++i) {
        auto res = post_chat(port, "{\"model\":\"t" + std::to_string(t) + "\",\"messages\":[]}");
        if (!res || res->status != 200) failures.fetch_add(1);
      }
    });
  }
  for (auto& worker : workers) worker.join();
  RequestLog log = server.stop();
  CHECK(failures.load() == 0);
  REQUIRE(log.entries.size() == kThreads * 5);
  for (std::size_t i = 0; i < log.entries.size(); ++i) CHECK(log.entries[i].index == i);
}

TEST_CASE("stop is idempotent and an unbindable port raises BindError") {
  Script script = Script::parse(json{{"on_exhausted", {{"final_stop", "x"}}}});
  MockServer server(std::move(script));
  server.start(0);
  server.stop();
  server.stop();

  MockServer bad(Script::parse(json{{"on_exhausted", {{"final_stop", "y"}}}}));
  CHECK_THROWS_AS(bad.start(-1), BindError);
}
