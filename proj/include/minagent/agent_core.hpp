// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "minagent/chat_protocol.hpp"
#include "minagent/llm_backend.hpp"
#include "minagent/toolbox.hpp"
#include "minagent/trajectory.hpp"

namespace minagent {

struct AgentConfig {
  std::string model;
  std::string base_url;
  std::string api_key;
  int max_turns = 40;  // counts assistant responses, not tool executions
  std::filesystem::path cwd;
  std::string task;
};

enum class RunStatus { Completed, TurnLimit, ApiFailure };

std::string_view run_status_name(RunStatus status);

struct RunOutcome {
  RunStatus status = RunStatus::Completed;
  std::optional<std::string> final_text;  // present iff status == Completed
  int turns_used = 0;
  std::string failure_detail;  // populated for ApiFailure
};

struct Conversation {
  std::vector<Message> messages;
  int turns_used = 0;
};

/// Deterministic: names the working directory and the four tools, nothing
/// volatile (no dates, hosts or random tokens).
std::string build_system_prompt(const Sandbox& sandbox);

/// The tool loop: seed [system, user(task)], call the model with the full
/// conversation plus the tool catalog, execute requested calls in order,
/// append one tool message per call, repeat until a plain answer or the turn
/// budget ends. All failures become a RunOutcome; nothing is thrown for
/// backend errors. Every request, response and tool execution is appended
/// to the sink before the next backend call.
RunOutcome run_agent(const AgentConfig& config, ChatBackend& backend, Sandbox& sandbox,
                     TrajectorySink* sink = nullptr, Conversation* out_conversation = nullptr);

}  // namespace minagent
