// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace minagent {

struct ProcResult {
  int exit_code = -1;  // WEXITSTATUS, or 128 + signal when the child was killed
  bool timed_out = false;
  std::string out;
  std::string err;
};

struct ProcLimits {
  std::chrono::milliseconds timeout{60'000};
  std::size_t output_cap = 1 << 20;  // per stream
};

/// Run argv[0] with the given arguments, working directory and limits.
/// The child is placed in its own process group; on timeout the whole group
/// receives SIGKILL and the result is marked timed_out. When env is set the
/// child sees exactly those "KEY=VALUE" entries, otherwise it inherits.
/// Throws std::runtime_error only for harness-level failures (pipe/fork).
ProcResult run_argv(const std::vector<std::string>& argv,
                    const std::filesystem::path& cwd,
                    const ProcLimits& limits,
                    const std::optional<std::vector<std::string>>& env = std::nullopt);

/// Run a command line through /bin/sh -c.
ProcResult run_shell_command(const std::string& command,
                             const std::filesystem::path& cwd,
                             const ProcLimits& limits);

/// Copy of the current environment with entries whose name matches any of
/// the given prefixes removed. Exact names match as a prefix of themselves.
std::vector<std::string> environment_without(const std::vector<std::string>& name_prefixes);

}  // namespace minagent
