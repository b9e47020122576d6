// SPDX-License-Identifier: Apache-2.0
#include "minagent/agent_core.hpp"

#include <sys/utsname.h>

namespace minagent {
namespace {

using nlohmann::json;

json config_payload(const AgentConfig& config) {
  return {{"model", config.model},
          {"base_url", config.base_url},
          {"api_key", std::string(kRedactedApiKey)},
          {"max_turns", config.max_turns},
          {"cwd", config.cwd.string()},
          {"task", config.task}};
}

json environment_payload() {
  struct utsname names {};
  uname(&names);
  return {{"os", names.sysname}, {"arch", names.machine}};
}

void emit(TrajectorySink* sink, EventKind kind, json payload) {
  if (sink) sink->append_now(kind, std::move(payload));
}

void check_conversation(const Conversation& conversation) {
  auto verdict = validate_message_sequence(conversation.messages);
  if (!verdict.valid) {
    throw std::logic_error("conversation invariant broken at index " +
                           std::to_string(verdict.violation_index) + ": " + verdict.reason);
  }
}

}  // namespace

std::string_view run_status_name(RunStatus status) {
  switch (status) {
    case RunStatus::Completed: return "completed";
    case RunStatus::TurnLimit: return "turn_limit";
    case RunStatus::ApiFailure: return "api_failure";
  }
  return "unknown";
}

std::string build_system_prompt(const Sandbox& sandbox) {
  std::string prompt;
  prompt += "You are a coding agent. You complete software tasks by calling tools and "
            "inspecting their results.\n\n";
  prompt += "Working directory: " + sandbox.root().string() + "\n\n";
  prompt += "Tools:\n";
  prompt += "  read_file(path): return the contents of a file\n";
  prompt += "  write_file(path, content): create or overwrite a file, creating parent "
            "directories\n";
  prompt += "  list_files(path?): list a directory, one entry per line, directories suffixed "
            "with /\n";
  prompt += "  run_shell(command, timeout_s?): run a shell command in the working directory\n\n";
  prompt += "All paths are relative to the working directory. When the task is complete, reply "
            "with plain text and no tool calls.";
  return prompt;
}

RunOutcome run_agent(const AgentConfig& config, ChatBackend& backend, Sandbox& sandbox,
                     TrajectorySink* sink, Conversation* out_conversation) {
  if (config.max_turns < 1) throw std::invalid_argument("max_turns must be >= 1");
  if (config.task.empty()) throw std::invalid_argument("task must be non-empty");

  Conversation conversation;
  conversation.messages.push_back(
      {Role::System, build_system_prompt(sandbox), {}, std::nullopt});
  conversation.messages.push_back({Role::User, config.task, {}, std::nullopt});
  check_conversation(conversation);

  emit(sink, EventKind::RunStart,
       {{"config", config_payload(config)}, {"env", environment_payload()}});

  auto finish = [&](RunOutcome outcome) {
    outcome.turns_used = conversation.turns_used;
    json payload = {{"outcome",
                     {{"status", run_status_name(outcome.status)},
                      {"final_text", outcome.final_text ? json(*outcome.final_text) : json(nullptr)},
                      {"turns_used", outcome.turns_used}}}};
    emit(sink, EventKind::RunEnd, std::move(payload));
    if (out_conversation) *out_conversation = conversation;
    return outcome;
  };

  const auto catalog = tool_catalog();
  while (conversation.turns_used < config.max_turns) {
    ChatRequest request{config.model, conversation.messages, catalog};
    emit(sink, EventKind::Request, {{"body", encode_request(request)}});

    BackendResult result;
    try {
      result = backend.complete(request);
    } catch (const BackendError& ex) {
      RunOutcome outcome{RunStatus::ApiFailure, std::nullopt, 0, ex.what()};
      return finish(std::move(outcome));
    }
    conversation.turns_used += 1;
    emit(sink, EventKind::Response, {{"body", result.raw_body}});

    conversation.messages.push_back(result.response.message);
    check_conversation(conversation);

    if (result.response.finish_reason == FinishReason::Stop) {
      return finish({RunStatus::Completed, result.response.message.content.value_or(""), 0, ""});
    }

    for (const ToolCall& call : result.response.message.tool_calls) {
      ToolResult tool_result = sandbox.execute_tool(call);
      emit(sink, EventKind::ToolExec,
           {{"call", {{"id", call.id}, {"name", call.name}, {"arguments", call.arguments}}},
            {"result",
             {{"tool_call_id", tool_result.tool_call_id},
              {"output", tool_result.output},
              {"is_error", tool_result.is_error}}}});
      conversation.messages.push_back(
          {Role::Tool, tool_result.output, {}, tool_result.tool_call_id});
      check_conversation(conversation);
    }
  }
  return finish({RunStatus::TurnLimit, std::nullopt, 0, ""});
}

}  // namespace minagent
