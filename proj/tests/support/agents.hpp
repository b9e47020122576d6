// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "minagent/conformance.hpp"

namespace minagent::testing {

inline std::string reference_template() {
  return std::string(TEST_AGENT_BIN) +
         " --model {MODEL} --base-url {BASE_URL} --api-key {API_KEY}"
         " --max-turns {MAX_TURNS} --cwd {CWD} {TASK}";
}

inline std::string mutant_template() {
  return std::string(TEST_MUTANT_BIN) +
         " --model {MODEL} --base-url {BASE_URL} --api-key {API_KEY}"
         " --max-turns {MAX_TURNS} --cwd {CWD} {TASK}";
}

// A subject that exits immediately: the black-box totality baseline. The
// placeholders are consumed as arguments `false` ignores.
inline std::string false_template() {
  return "false --base-url {BASE_URL} {TASK}";
}

inline AgentUnderTest reference_agent() { return {reference_template()}; }
inline AgentUnderTest mutant_agent() { return {mutant_template()}; }
inline AgentUnderTest false_agent() { return {false_template()}; }

inline std::vector<ConformanceCheck> bundled_checks() {
  return load_checks(std::string(TEST_DATA_DIR) + "/checks/default.checks.json");
}

inline SpecDocument bundled_spec() {
  return SpecDocument::load_file(std::string(TEST_DATA_DIR) + "/spec/agent.spec.md");
}

}  // namespace minagent::testing
