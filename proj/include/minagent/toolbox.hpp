// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "minagent/chat_protocol.hpp"

namespace minagent {

struct ToolResult {
  std::string tool_call_id;
  std::string output;  // never empty; error text is prefixed "error: "
  bool is_error = false;
};

struct SandboxOptions {
  std::chrono::seconds shell_timeout{60};
  std::size_t output_cap = 65536;
};

class PathEscapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The agent's effectors, confined to one working directory. One Sandbox
/// serves one run; tool calls execute strictly sequentially.
class Sandbox {
 public:
  explicit Sandbox(const std::filesystem::path& root, SandboxOptions options = {});

  const std::filesystem::path& root() const { return root_; }
  const SandboxOptions& options() const { return options_; }

  /// Root-joined, lexically normalized, symlink-resolved path. Absolute
  /// inputs and anything resolving outside root throw PathEscapeError.
  std::filesystem::path resolve_path(std::string_view relative) const;

  /// Total: every failure (unknown tool, bad arguments, missing file,
  /// escape attempt, timeout) becomes an is_error ToolResult.
  ToolResult execute_tool(const ToolCall& call);

  /// Root-relative paths written via write_file, in first-write order.
  const std::vector<std::string>& written_files() const { return written_; }

 private:
  std::string run_read_file(const nlohmann::json& args);
  std::string run_write_file(const nlohmann::json& args);
  std::string run_list_files(const nlohmann::json& args);
  std::string run_shell(const nlohmann::json& args);
  std::string cap_output(std::string text) const;

  std::filesystem::path root_;  // canonical
  SandboxOptions options_;
  std::vector<std::string> written_;
};

/// The fixed four-tool catalog; names and parameter names are stable.
std::vector<ToolSpec> tool_catalog();

}  // namespace minagent
