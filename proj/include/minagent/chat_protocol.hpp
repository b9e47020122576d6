// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace minagent {

enum class Role { System, User, Assistant, Tool };

std::string_view role_name(Role role);
Role parse_role(std::string_view name);  // throws DecodeError on unknown role

/// One tool invocation requested by the model. `arguments` is an opaque
/// serialized key-value document; it is parsed only at execution time.
struct ToolCall {
  std::string id;
  std::string name;
  std::string arguments;

  bool operator==(const ToolCall&) const = default;
};

struct Message {
  Role role = Role::User;
  std::optional<std::string> content;
  std::vector<ToolCall> tool_calls;            // assistant messages only
  std::optional<std::string> tool_call_id;     // tool messages only

  bool operator==(const Message&) const = default;
};

struct ToolSpec {
  std::string name;
  std::string description;
  nlohmann::json parameters;  // JSON-schema-shaped object

  bool operator==(const ToolSpec&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<Message> messages;
  std::vector<ToolSpec> tools;

  bool operator==(const ChatRequest&) const = default;
};

enum class FinishReason { Stop, ToolCalls };

struct ChatResponse {
  Message message;  // role == Assistant
  FinishReason finish_reason = FinishReason::Stop;
  std::string model;

  bool operator==(const ChatResponse&) const = default;
};

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SequenceVerdict {
  bool valid = true;
  std::size_t violation_index = 0;
  std::string reason;

  static SequenceVerdict ok() { return {}; }
  static SequenceVerdict violation(std::size_t index, std::string why) {
    return {false, index, std::move(why)};
  }
};

/// Accepts iff the sequence starts with the single system message, tool
/// results follow their assistant's calls one-to-one in call order, and no
/// tool result arrives without a pending call. A sequence may end with calls
/// still pending (the loop appends their results next).
SequenceVerdict validate_message_sequence(std::span<const Message> messages);

nlohmann::json message_to_json(const Message& message);
Message message_from_json(const nlohmann::json& payload);  // throws DecodeError

/// Deterministic canonical serialization (sorted keys, no extra whitespace).
/// Throws EncodeError naming the violated invariant.
std::string encode_request(const ChatRequest& request);
ChatRequest decode_request(std::string_view bytes);  // throws DecodeError

std::string encode_response(const ChatResponse& response);
/// Unknown fields are ignored; zero choices or an unknown finish_reason is a
/// hard error carrying the offending fragment.
ChatResponse decode_response(std::string_view bytes);  // throws DecodeError

}  // namespace minagent
