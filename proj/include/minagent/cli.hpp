// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "minagent/agent_core.hpp"

namespace minagent {

struct RunInvocation {
  AgentConfig config;
  // Per-option value origin: "flag", "environment" or "default". The api_key
  // value itself is never echoed anywhere.
  std::map<std::string, std::string> provenance;
};

struct UsageExit {
  std::string text;
  int code = 1;
  bool to_stderr = false;
};

using RunParse = std::variant<RunInvocation, UsageExit>;

/// The short usage block shown on bare invocation and on errors.
std::string run_usage_text(std::string_view prog);
/// Usage plus option and subcommand summaries, shown for -h/--help.
std::string run_help_text(std::string_view prog);

/// Pure parser for the default (run) subcommand. `args` excludes the program
/// name. Precedence is flag > environment > default; environment names are
/// AGENT_MODEL, AGENT_BASE_URL, AGENT_API_KEY (fallback OPENAI_API_KEY),
/// AGENT_MAX_TURNS and AGENT_CWD.
RunParse parse_run_args(const std::vector<std::string>& args,
                        const std::map<std::string, std::string>& env, std::string_view prog);

/// Process entry: dispatches subcommands, runs the agent, maps outcomes to
/// the exit-code partition {0 completed, 1 usage, 2 turn limit, 3 api
/// failure, 4 environment}.
int run_cli(int argc, char** argv);

}  // namespace minagent
