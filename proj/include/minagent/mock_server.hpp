// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "minagent/chat_protocol.hpp"

namespace minagent {

class ScriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One scripted reply: either a canned chat response (wire form) or a raw
/// HTTP status with a body, served `repeat` times.
struct ScriptStep {
  std::optional<nlohmann::json> response;  // ChatResponse wire form
  int status = 0;
  std::string body;
  int repeat = 1;
};

struct Script {
  enum class OnExhausted { Error500, FinalStop };

  std::vector<ScriptStep> steps;
  OnExhausted on_exhausted = OnExhausted::Error500;
  std::string final_stop_text;

  static Script parse(const nlohmann::json& document);        // throws ScriptError
  static Script load_file(const std::filesystem::path& path);  // throws ScriptError
};

struct RequestLogEntry {
  std::size_t index = 0;       // arrival order, dense from 0
  std::string body;            // raw bytes as received
  std::string authorization;   // Authorization header, recorded not enforced
  std::optional<ChatRequest> request;  // decode attempt
  std::string decode_error;
};

struct RequestLog {
  std::vector<RequestLogEntry> entries;
};

/// Order-deterministic scripted stand-in for the model endpoint. Replies
/// depend only on arrival order; every request is logged before the reply.
class MockServer {
 public:
  explicit MockServer(Script script);
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Bind 127.0.0.1 (port 0 picks a free one), serve on a background
  /// thread, and return the bound port. Throws BindError.
  int start(int port = 0);
  /// Idempotent; drains in-flight requests and returns the final log.
  RequestLog stop();

  int port() const;
  std::string base_url() const;
  RequestLog snapshot_log() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace minagent
