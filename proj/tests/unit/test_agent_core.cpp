// SPDX-License-Identifier: Apache-2.0
#include "minagent/agent_core.hpp"

#include <doctest.h>

#include <random>

#include "support/helpers.hpp"

using namespace minagent;
using minagent::testing::EndlessBackend;
using minagent::testing::ScriptedBackend;
using minagent::testing::stop_response;
using minagent::testing::TempDir;
using minagent::testing::tool_call_response;
using nlohmann::json;

namespace {

AgentConfig config_for(const TempDir& dir, int max_turns = 10) {
  AgentConfig config;
  config.model = "m-test";
  config.base_url = "http://127.0.0.1:9";
  config.api_key = "sk-SENTINEL-55aa";
  config.max_turns = max_turns;
  config.cwd = dir.path();
  config.task = "the task";
  return config;
}

}  // namespace

TEST_CASE("build_system_prompt names the root and all four tools, deterministically") {
  TempDir dir;
  Sandbox sandbox(dir.path());
  std::string prompt = build_system_prompt(sandbox);
  CHECK(prompt.find(sandbox.root().string()) != std::string::npos);
  for (const char* tool : {"read_file", "write_file", "list_files", "run_shell"}) {
    CHECK(prompt.find(tool) != std::string::npos);
  }
  Sandbox again(dir.path());
  CHECK(build_system_prompt(again) == prompt);
}

TEST_CASE("a single stop response completes in one turn") {
  TempDir dir;
  Sandbox sandbox(dir.path());
  ScriptedBackend backend({stop_response("done")});
  auto outcome = run_agent(config_for(dir), backend, sandbox);
  CHECK(outcome.status == RunStatus::Completed);
  CHECK(outcome.final_text == "done");
  CHECK(outcome.turns_used == 1);
  REQUIRE(backend.requests.size() == 1);
  REQUIRE(backend.requests[0].messages.size() == 2);
  CHECK(backend.requests[0].messages[0].role == Role::System);
  CHECK(backend.requests[0].messages[1].role == Role::User);
  CHECK(backend.requests[0].messages[1].content == "the task");
  CHECK(backend.requests[0].tools.size() == 4);
}

TEST_CASE("a stop with empty content completes with empty final text") {
  TempDir dir;
  Sandbox sandbox(dir.path());
  ScriptedBackend backend({stop_response("")});
  auto outcome = run_agent(config_for(dir), backend, sandbox);
  CHECK(outcome.status == RunStatus::Completed);
  CHECK(outcome.final_text == "");
}

TEST_CASE("tool calls are executed and answered one message per call, in order") {
  TempDir dir;
  Sandbox sandbox(dir.path());
  ScriptedBackend backend({
      tool_call_response({{"c-a", "write_file", R"({"path":"a.txt","content":"x"})"},
                          {"c-b", "read_file", R"({"path":"a.txt"})"}}),
      stop_response("wrote it"),
  });
  auto outcome = run_agent(config_for(dir), backend, sandbox);
  CHECK(outcome.status == RunStatus::Completed);
  CHECK(outcome.final_text == "wrote it");
  CHECK(outcome.turns_used == 2);
  CHECK(dir.read_file("a.txt") == "x");

  REQUIRE(backend.requests.size() == 2);
  const auto& second = backend.requests[1].messages;
  REQUIRE(second.size() == 5);  // system, user, assistant, tool, tool
  CHECK(second[2].role == Role::Assistant);
  CHECK(second[3].role == Role::Tool);
  CHECK(second[3].tool_call_id == "c-a");
  CHECK(second[4].tool_call_id == "c-b");
  CHECK(second[4].content == "x");  // read_file result observed by the model
}

TEST_CASE("an endless tool loop stops at the turn budget with that many requests") {
  TempDir dir;
  Sandbox sandbox(dir.path());
  EndlessBackend backend(tool_call_response({{"c1", "list_files", "{}"}}));
  auto outcome = run_agent(config_for(dir, 3), backend, sandbox);
  CHECK(outcome.status == RunStatus::TurnLimit);
  CHECK(outcome.final_text == std::nullopt);
  CHECK(outcome.turns_used == 3);
  CHECK(backend.requests.size() == 3);
}

TEST_CASE("a backend error becomes an api_failure outcome, not an exception") {
  TempDir dir;
  Sandbox sandbox(dir.path());
  ScriptedBackend backend({});  // exhausted immediately
  auto outcome = run_agent(config_for(dir), backend, sandbox);
  CHECK(outcome.status == RunStatus::ApiFailure);
  CHECK(outcome.final_text == std::nullopt);
  CHECK_FALSE(outcome.failure_detail.empty());
}

TEST_CASE("conversation growth is prefix-monotone and bounded by max_turns") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 30; ++trial) {
    TempDir dir;
    Sandbox sandbox(dir.path());

    // Random script: a few tool rounds, then maybe a stop (or run out).
    std::vector<ChatResponse> script;
    int rounds = static_cast<int>(rng() % 6);
    for (int r = 0; r < rounds; ++r) {
      if (rng() % 4 == 0) {
        script.push_back(stop_response("text " + std::to_string(r)));
        break;
      }
      script.push_back(tool_call_response(
          {{"c" + std::to_string(r), rng() % 2 ? "list_files" : "read_file",
            rng() % 2 ? "{}" : R"({"path":"nope"})"}}));
    }
    int max_turns = 1 + static_cast<int>(rng() % 5);
    ScriptedBackend backend(script);
    auto config = config_for(dir, max_turns);
    run_agent(config, backend, sandbox);

    CAPTURE(trial);
    CHECK(backend.requests.size() <= static_cast<std::size_t>(max_turns));
    for (std::size_t i = 1; i < backend.requests.size(); ++i) {
      const auto& prev = backend.requests[i - 1].messages;
      const auto& next = backend.requests[i].messages;
      REQUIRE(prev.size() < next.size());
      for (std::size_t k = 0; k < prev.size(); ++k) REQUIRE(prev[k] == next[k]);
    }
    // Tool messages between assistants match the prior assistant's calls 1:1.
    for (const auto& request : backend.requests) {
      const auto& messages = request.messages;
      for (std::size_t k = 0; k < messages.size(); ++k) {
        if (messages[k].role != Role::Assistant || messages[k].tool_calls.empty()) continue;
        for (std::size_t c = 0; c < messages[k].tool_calls.size(); ++c) {
          REQUIRE(k + 1 + c < messages.size());
          REQUIRE(messages[k + 1 + c].role == Role::Tool);
          REQUIRE(messages[k + 1 + c].tool_call_id == messages[k].tool_calls[c].id);
        }
      }
    }
  }
}

TEST_CASE("the trajectory records the run and never leaks the api key") {
  TempDir dir;
  TempDir workdir;
  Sandbox sandbox(workdir.path());
  auto file = dir.path() / "run.traj.jsonl";
  {
    TrajectorySink sink(file);
    ScriptedBackend backend({
        tool_call_response({{"c1", "run_shell", R"({"command":"echo hey"})"}}),
        stop_response("finished"),
    });
    auto config = config_for(workdir);
    auto outcome = run_agent(config, backend, sandbox, &sink);
    CHECK(outcome.status == RunStatus::Completed);
    CHECK(sink.closed());
  }
  auto events = read_trajectory(file);
  // run_start, request, response, tool_exec, request, response, run_end
  REQUIRE(events.size() == 7);
  CHECK(events[0].kind == EventKind::RunStart);
  CHECK(events[0].payload["config"]["api_key"] == kRedactedApiKey);
  CHECK(events[3].kind == EventKind::ToolExec);
  CHECK(events[3].payload["result"]["is_error"] == false);
  CHECK(events[6].kind == EventKind::RunEnd);
  CHECK(events[6].payload["outcome"]["status"] == "completed");
  CHECK(events[6].payload["outcome"]["final_text"] == "finished");

  std::ifstream in(file);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("sk-SENTINEL-55aa") == std::string::npos);
}

TEST_CASE("record then replay reproduces messages, outcome and file effects") {
  TempDir dir;
  Sandbox record_sandbox(dir.path());
  auto file = dir.path() / ".rec.traj.jsonl";
  AgentConfig config = config_for(dir);

  RunOutcome recorded;
  Conversation recorded_conversation;
  {
    TrajectorySink sink(file);
    ScriptedBackend backend({
        tool_call_response({{"c1", "write_file", R"({"path":"out.txt","content":"v1"})"}}),
        stop_response("done v1"),
    });
    recorded = run_agent(config, backend, record_sandbox, &sink, &recorded_conversation);
    CHECK(recorded.status == RunStatus::Completed);
  }

  // Replay in the same working directory: same inputs, same effects.
  Sandbox replay_sandbox(dir.path());
  ReplayBackend replay = ReplayBackend::from_trajectory(file);
  Conversation replay_conversation;
  RunOutcome replayed = run_agent(config, replay, replay_sandbox, nullptr, &replay_conversation);

  CHECK(replayed.status == recorded.status);
  CHECK(replayed.final_text == recorded.final_text);
  CHECK(replayed.turns_used == recorded.turns_used);
  CHECK(replay_conversation.messages == recorded_conversation.messages);
  CHECK(dir.read_file("out.txt") == "v1");
}
