// SPDX-License-Identifier: Apache-2.0
#include "minagent/chat_protocol.hpp"

#include <deque>
#include <set>

namespace minagent {
namespace {

using nlohmann::json;

std::string excerpt(std::string_view text, std::size_t limit = 200) {
  std::string s(text.substr(0, limit));
  if (text.size() > limit) s += "...";
  return s;
}

std::string excerpt_json(const json& fragment) { return excerpt(fragment.dump()); }

// Per-message field invariants, independent of sequence position.
std::optional<std::string> message_shape_violation(const Message& m) {
  switch (m.role) {
    case Role::System:
    case Role::User:
      if (!m.tool_calls.empty()) return "tool_calls on a " + std::string(role_name(m.role)) + " message";
      if (m.tool_call_id) return "tool_call_id on a " + std::string(role_name(m.role)) + " message";
      break;
    case Role::Assistant:
      if (!m.content && m.tool_calls.empty()) return "assistant message with neither content nor tool_calls";
      if (m.tool_call_id) return "tool_call_id on an assistant message";
      break;
    case Role::Tool:
      if (!m.tool_call_id) return "tool message without tool_call_id";
      if (!m.content) return "tool message without content";
      if (!m.tool_calls.empty()) return "tool_calls on a tool message";
      break;
  }
  if (!m.tool_calls.empty()) {
    std::set<std::string> ids;
    for (const auto& call : m.tool_calls) {
      if (call.id.empty()) return "tool call with empty id";
      if (!ids.insert(call.id).second) return "duplicate tool call id '" + call.id + "'";
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view role_name(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
  }
  return "unknown";
}

Role parse_role(std::string_view name) {
  if (name == "system") return Role::System;
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  if (name == "tool") return Role::Tool;
  throw DecodeError("unknown role: " + std::string(name));
}

SequenceVerdict validate_message_sequence(std::span<const Message> messages) {
  if (messages.empty()) {
    return SequenceVerdict::violation(0, "empty message list");
  }
  if (messages.front().role != Role::System) {
    return SequenceVerdict::violation(0, "first message must be system");
  }
  std::deque<std::string> pending;  // tool call ids awaiting results, in call order
  for (std::size_t i = 0; i < messages.size(); ++i) {
    const Message& m = messages[i];
    if (auto why = message_shape_violation(m)) {
      return SequenceVerdict::violation(i, *why);
    }
    switch (m.role) {
      case Role::System:
        if (i != 0) return SequenceVerdict::violation(i, "system message after the first position");
        break;
      case Role::Tool:
        if (pending.empty()) {
          return SequenceVerdict::violation(i, "tool result without pending call");
        }
        if (*m.tool_call_id != pending.front()) {
          return SequenceVerdict::violation(i, "tool result out of call order: expected id '" +
                                                   pending.front() + "', got '" + *m.tool_call_id + "'");
        }
        pending.pop_front();
        break;
      case Role::User:
      case Role::Assistant:
        if (!pending.empty()) {
          return SequenceVerdict::violation(i, "pending tool calls unresolved before " +
                                                   std::string(role_name(m.role)) + " message");
        }
        for (const auto& call : m.tool_calls) pending.push_back(call.id);
        break;
    }
  }
  return SequenceVerdict::ok();
}

json message_to_json(const Message& message) {
  json out;
  out["role"] = role_name(message.role);
  out["content"] = message.content ? json(*message.content) : json(nullptr);
  if (!message.tool_calls.empty()) {
    json calls = json::array();
    for (const auto& call : message.tool_calls) {
      calls.push_back({{"id", call.id},
                       {"type", "function"},
                       {"function", {{"name", call.name}, {"arguments", call.arguments}}}});
    }
    out["tool_calls"] = std::move(calls);
  }
  if (message.tool_call_id) out["tool_call_id"] = *message.tool_call_id;
  return out;
}

Message message_from_json(const json& payload) {
  if (!payload.is_object()) throw DecodeError("message is not an object: " + excerpt_json(payload));
  Message m;
  if (!payload.contains("role") || !payload["role"].is_string()) {
    throw DecodeError("message without role: " + excerpt_json(payload));
  }
  m.role = parse_role(payload["role"].get<std::string>());
  if (payload.contains("content") && payload["content"].is_string()) {
    m.content = payload["content"].get<std::string>();
  }
  if (payload.contains("tool_calls")) {
    const json& calls = payload["tool_calls"];
    if (!calls.is_array()) throw DecodeError("tool_calls is not an array: " + excerpt_json(payload));
    for (const json& c : calls) {
      if (!c.is_object() || !c.contains("function") || !c["function"].is_object()) {
        throw DecodeError("malformed tool call: " + excerpt_json(c));
      }
      const json& fn = c["function"];
      if (!fn.contains("name") || !fn["name"].is_string() ||
          !fn.contains("arguments") || !fn["arguments"].is_string()) {
        throw DecodeError("tool call function needs string name and arguments: " + excerpt_json(c));
      }
      m.tool_calls.push_back({c.value("id", ""), fn["name"].get<std::string>(),
                              fn["arguments"].get<std::string>()});
    }
  }
  if (payload.contains("tool_call_id") && payload["tool_call_id"].is_string()) {
    m.tool_call_id = payload["tool_call_id"].get<std::string>();
  }
  return m;
}

std::string encode_request(const ChatRequest& request) {
  if (request.messages.empty()) throw EncodeError("empty message list");
  std::size_t system_count = 0;
  for (const auto& m : request.messages) {
    if (m.role == Role::System) ++system_count;
  }
  if (request.messages.front().role != Role::System) {
    throw EncodeError("first message must be system");
  }
  if (system_count != 1) throw EncodeError("exactly one system message required");
  if (auto verdict = validate_message_sequence(request.messages); !verdict.valid) {
    throw EncodeError("invalid message sequence at index " +
                      std::to_string(verdict.violation_index) + ": " + verdict.reason);
  }
  std::set<std::string> names;
  for (const auto& tool : request.tools) {
    if (tool.name.empty()) throw EncodeError("tool spec with empty name");
    if (!names.insert(tool.name).second) throw EncodeError("duplicate tool name: " + tool.name);
    if (tool.parameters.contains("required")) {
      const json& props = tool.parameters.value("properties", json::object());
      for (const auto& req : tool.parameters["required"]) {
        if (!req.is_string() || !props.contains(req.get<std::string>())) {
          throw EncodeError("tool '" + tool.name + "' requires parameter missing from schema");
        }
      }
    }
  }

  json body;
  body["model"] = request.model;
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back(message_to_json(m));
  body["messages"] = std::move(messages);
  json tools = json::array();
  for (const auto& tool : request.tools) {
    tools.push_back({{"type", "function"},
                     {"function", {{"name", tool.name},
                                   {"description", tool.description},
                                   {"parameters", tool.parameters}}}});
  }
  body["tools"] = std::move(tools);
  return body.dump();
}

ChatRequest decode_request(std::string_view bytes) {
  json payload;
  try {
    payload = json::parse(bytes);
  } catch (const json::exception& ex) {
    throw DecodeError(std::string("malformed request payload: ") + ex.what() + ": " + excerpt(bytes));
  }
  if (!payload.is_object()) throw DecodeError("request is not an object: " + excerpt(bytes));
  ChatRequest req;
  req.model = payload.value("model", "");
  if (!payload.contains("messages") || !payload["messages"].is_array()) {
    throw DecodeError("request without messages array: " + excerpt(bytes));
  }
  for (const json& m : payload["messages"]) req.messages.push_back(message_from_json(m));
  if (payload.contains("tools")) {
    for (const json& t : payload["tools"]) {
      if (!t.is_object() || !t.contains("function") || !t["function"].is_object()) {
        throw DecodeError("malformed tool spec: " + excerpt_json(t));
      }
      const json& fn = t["function"];
      req.tools.push_back({fn.value("name", ""), fn.value("description", ""),
                           fn.value("parameters", json::object())});
    }
  }
  return req;
}

std::string encode_response(const ChatResponse& response) {
  json body;
  body["model"] = response.model;
  body["choices"] = json::array({json{
      {"message", message_to_json(response.message)},
      {"finish_reason", response.finish_reason == FinishReason::Stop ? "stop" : "tool_calls"}}});
  return body.dump();
}

ChatResponse decode_response(std::string_view bytes) {
  json payload;
  try {
    payload = json::parse(bytes);
  } catch (const json::exception& ex) {
    throw DecodeError(std::string("malformed response payload: ") + ex.what() + ": " + excerpt(bytes));
  }
  if (!payload.is_object()) throw DecodeError("response is not an object: " + excerpt(bytes));
  if (!payload.contains("choices") || !payload["choices"].is_array() || payload["choices"].empty()) {
    throw DecodeError("empty choices list: " + excerpt_json(payload));
  }
  const json& choice = payload["choices"][0];
  if (!choice.is_object() || !choice.contains("message")) {
    throw DecodeError("choice without message: " + excerpt_json(choice));
  }
  ChatResponse response;
  response.message = message_from_json(choice["message"]);
  if (response.message.role != Role::Assistant) {
    throw DecodeError("response message role is not assistant: " + excerpt_json(choice));
  }
  std::string finish = choice.value("finish_reason", "");
  if (finish == "stop") {
    response.finish_reason = FinishReason::Stop;
  } else if (finish == "tool_calls") {
    response.finish_reason = FinishReason::ToolCalls;
  } else {
    throw DecodeError("unknown finish_reason: '" + finish + "': " + excerpt_json(choice));
  }
  bool has_calls = !response.message.tool_calls.empty();
  if (has_calls != (response.finish_reason == FinishReason::ToolCalls)) {
    throw DecodeError("finish_reason does not match tool_calls presence: " + excerpt_json(choice));
  }
  if (auto why = message_shape_violation(response.message)) {
    throw DecodeError(*why + ": " + excerpt_json(choice));
  }
  response.model = payload.value("model", "");
  return response;
}

}  // namespace minagent
