// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "minagent/mock_server.hpp"
#include "minagent/spec_tools.hpp"

namespace minagent {

/// Infrastructure failures (bind, temp dir, pipes) as opposed to a failing
/// check: the subject never gets blamed for harness trouble.
class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownSectionError : public std::runtime_error {
 public:
  UnknownSectionError(const std::string& check_id, const std::string& tag)
      : std::runtime_error("check '" + check_id + "' names unknown spec section '" + tag + "'"),
        check_id(check_id),
        tag(tag) {}
  std::string check_id;
  std::string tag;
};

/// A black-box agent command. The template is split on whitespace and each
/// token has {TASK} {MODEL} {BASE_URL} {API_KEY} {MAX_TURNS} {CWD}
/// substituted, so a task with spaces stays one argument.
struct AgentUnderTest {
  std::string launch_template;

  /// Throws std::invalid_argument unless {BASE_URL} and {TASK} are present.
  void validate() const;
};

struct ConformanceCheck {
  enum class Invocation { Task, Help, Bare };
  enum class StdoutCompare { Exact, FlagTokens };

  std::string id;
  std::string spec_section;
  std::string task;
  std::string model = "mock-model";
  std::string api_key = "test-key-123";
  int max_turns = 8;
  Invocation invocation = Invocation::Task;
  StdoutCompare stdout_compare = StdoutCompare::Exact;
  nlohmann::json script;                    // mock Script document
  std::vector<nlohmann::json> expectations;
};

std::vector<ConformanceCheck> load_checks(const std::filesystem::path& path);
std::vector<ConformanceCheck> parse_checks(const nlohmann::json& document);

/// Everything observable the harness keeps from one check run.
struct CheckObservation {
  int exit_code = -1;
  bool timed_out = false;
  std::string stdout_text;
  std::string stderr_text;
  std::size_t request_count = 0;
  std::vector<std::vector<std::string>> request_roles;  // per request, in order
  std::vector<std::string> request_models;
  std::vector<std::string> request_bodies;
  std::vector<std::string> auth_headers;
  std::map<std::string, std::string> file_digests;  // non-hidden files under workdir
  std::vector<std::string> prog_tokens;             // for stdout normalization
  std::string workdir;
};

struct CheckResult {
  std::string id;
  std::string spec_section;
  bool passed = false;
  std::string first_failure;
  CheckObservation observation;
};

struct ConformanceReport {
  std::vector<CheckResult> results;
  std::map<std::string, int> coverage;  // sections named by the checks

  int passed_count() const;
  bool all_passed() const;
  double pass_ratio() const;
  nlohmann::json to_json() const;
};

/// Fresh workdir and fresh mock server per check; checks are independent.
ConformanceReport run_suite(const AgentUnderTest& agent,
                            const std::vector<ConformanceCheck>& checks);

struct ObservableDiff {
  std::string observable;
  std::string a;
  std::string b;
};

struct CheckDivergence {
  std::string id;
  std::string verdict_a;
  std::string verdict_b;
  std::vector<ObservableDiff> diffs;
};

struct DivergenceReport {
  std::vector<CheckDivergence> divergent;
  std::size_t checks_compared = 0;

  bool empty() const { return divergent.empty(); }
  nlohmann::json to_json() const;
};

/// Run the suite against both agents and report verdict differences plus
/// normalized-observable differences (usage text compared as flag-token
/// sets, program names as PROG, workdir paths as WORKDIR).
DivergenceReport compare_agents(const AgentUnderTest& a, const AgentUnderTest& b,
                                const std::vector<ConformanceCheck>& checks);

/// Check count per spec section; zero-count sections are the gaps. Throws
/// UnknownSectionError when a check names a tag absent from the document.
std::map<std::string, int> coverage_report(const std::vector<ConformanceCheck>& checks,
                                           const SpecDocument& spec);

/// Whitespace-collapsed text with program-name tokens replaced by PROG and
/// the workdir path replaced by WORKDIR.
std::string normalize_stdout(std::string_view text, const std::vector<std::string>& prog_tokens,
                             const std::string& workdir);

/// Flag-ish tokens of a usage text: tokens starting with '-' plus the
/// positional name "task", with surrounding brackets and commas stripped.
std::set<std::string> usage_flag_tokens(std::string_view text);

/// The agent surface tokens usage comparisons care about.
inline const std::set<std::string> kNormativeUsageTokens = {
    "-h", "--model", "--base-url", "--api-key", "--max-turns", "--cwd", "task"};

}  // namespace minagent
