// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "minagent/chat_protocol.hpp"

namespace minagent {

struct RetryPolicy {
  int max_attempts = 3;
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(1000),
                                                 std::chrono::milliseconds(2000),
                                                 std::chrono::milliseconds(4000)};
};

struct BackendConfig {
  std::string base_url;
  std::string api_key;
  std::chrono::seconds timeout{120};
  RetryPolicy retry;
};

struct BackendResult {
  ChatResponse response;
  std::string raw_body;  // verbatim bytes, stored in the trajectory
};

class BackendError : public std::runtime_error {
 public:
  enum class Kind { Exhausted, Terminal, Decode, ReplayExhausted, ReplayMismatch };

  BackendError(Kind kind, std::string message, int status = 0, int attempts = 0)
      : std::runtime_error(std::move(message)), kind(kind), status(status), attempts(attempts) {}

  Kind kind;
  int status;
  int attempts;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendResult complete(const ChatRequest& request) = 0;
};

/// POST {base_url}/chat/completions with Bearer auth. Network errors, 5xx
/// and 429 are retried per policy; any other non-2xx status is terminal.
class HttpBackend final : public ChatBackend {
 public:
  using SleepFn = std::function<void(std::chrono::milliseconds)>;

  explicit HttpBackend(BackendConfig config);

  BackendResult complete(const ChatRequest& request) override;

  /// Test hook; defaults to an actual sleep.
  void set_sleep_hook(SleepFn hook) { sleep_ = std::move(hook); }

 private:
  BackendConfig config_;
  std::string host_;         // scheme://authority
  std::string path_prefix_;  // optional path from base_url
  SleepFn sleep_;
};

struct ReplayEvent {
  std::string request_digest;  // empty disables the match check
  std::string response_body;
};

/// Serves canned responses in order; when a digest is recorded it must match
/// the digest of the canonical encoding of the incoming request. The cursor
/// advances under a lock, so concurrent calls are serialized.
class ReplayBackend final : public ChatBackend {
 public:
  explicit ReplayBackend(std::vector<ReplayEvent> events);

  /// Build a replay source from a recorded trajectory, pairing each request
  /// event with the response event that follows it.
  static ReplayBackend from_trajectory(const std::filesystem::path& file);

  BackendResult complete(const ChatRequest& request) override;

  std::size_t remaining() const;

 private:
  std::vector<ReplayEvent> events_;
  std::size_t cursor_ = 0;
  mutable std::mutex mu_;
};

/// Digest used for replay matching: SHA-256 of the canonical request encoding.
std::string request_digest(const ChatRequest& request);

}  // namespace minagent
