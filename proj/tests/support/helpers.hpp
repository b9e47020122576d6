// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "minagent/chat_protocol.hpp"
#include "minagent/llm_backend.hpp"

namespace minagent::testing {

/// Self-deleting temporary directory for one test.
class TempDir {
 public:
  explicit TempDir(const std::string& label = "minagent-test") {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / (label + "-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

  std::filesystem::path write_file(const std::string& name, const std::string& content) const {
    auto file = path_ / name;
    std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << content;
    return file;
  }

  std::string read_file(const std::string& name) const {
    std::ifstream in(path_ / name, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

 private:
  std::filesystem::path path_;
};

/// In-process backend fed a fixed list of responses; records every request.
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<ChatResponse> responses)
      : responses_(std::move(responses)) {}

  BackendResult complete(const ChatRequest& request) override {
    requests.push_back(request);
    if (cursor_ >= responses_.size()) {
      throw BackendError(BackendError::Kind::Exhausted, "scripted backend exhausted");
    }
    const ChatResponse& response = responses_[cursor_++];
    return {response, encode_response(response)};
  }

  std::vector<ChatRequest> requests;

 private:
  std::vector<ChatResponse> responses_;
  std::size_t cursor_ = 0;
};

/// Backend that replays one response forever (for turn-limit style tests).
class EndlessBackend final : public ChatBackend {
 public:
  explicit EndlessBackend(ChatResponse response) : response_(std::move(response)) {}

  BackendResult complete(const ChatRequest& request) override {
    requests.push_back(request);
    return {response_, encode_response(response_)};
  }

  std::vector<ChatRequest> requests;

 private:
  ChatResponse response_;
};

inline ChatResponse stop_response(std::string text, std::string model = "mock-model") {
  ChatResponse response;
  response.message = {Role::Assistant, std::move(text), {}, std::nullopt};
  response.finish_reason = FinishReason::Stop;
  response.model = std::move(model);
  return response;
}

inline ChatResponse tool_call_response(std::vector<ToolCall> calls,
                                       std::string model = "mock-model") {
  ChatResponse response;
  response.message = {Role::Assistant, std::nullopt, std::move(calls), std::nullopt};
  response.finish_reason = FinishReason::ToolCalls;
  response.model = std::move(model);
  return response;
}

inline nlohmann::json wire_stop(const std::string& text) {
  return nlohmann::json::parse(encode_response(stop_response(text)));
}

inline nlohmann::json wire_tool_call(const std::string& id, const std::string& name,
                                     const nlohmann::json& arguments) {
  return nlohmann::json::parse(
      encode_response(tool_call_response({{id, name, arguments.dump()}})));
}

}  // namespace minagent::testing
