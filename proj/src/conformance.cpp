// SPDX-License-Identifier: Apache-2.0
#include "minagent/conformance.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include "minagent/digest.hpp"
#include "minagent/proc.hpp"

namespace minagent {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::atomic<std::uint64_t> g_workdir_counter{0};

fs::path fresh_base_dir() {
  auto id = g_workdir_counter.fetch_add(1);
  fs::path base = fs::temp_directory_path() /
                  ("minagent-conf-" + std::to_string(getpid()) + "-" + std::to_string(id));
  std::error_code ec;
  fs::create_directories(base / "work", ec);
  if (ec) throw HarnessError("cannot create check workdir: " + base.string());
  return base;
}

std::string substitute(std::string text, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    std::string placeholder = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
      text.replace(pos, placeholder.size(), value);
      pos += value.size();
    }
  }
  return text;
}

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string token;
  while (in >> token) tokens.push_back(token);
  return tokens;
}

std::string trim_decor(const std::string& token) {
  std::size_t begin = token.find_first_not_of("[](),");
  if (begin == std::string::npos) return "";
  std::size_t end = token.find_last_not_of("[](),.");
  return token.substr(begin, end - begin + 1);
}

std::string roles_to_string(const std::vector<std::vector<std::string>>& roles) {
  std::string out;
  for (const auto& request : roles) {
    out += "[";
    for (std::size_t i = 0; i < request.size(); ++i) {
      if (i) out += ",";
      out += request[i];
    }
    out += "]";
  }
  return out;
}

std::string digests_to_string(const std::map<std::string, std::string>& digests) {
  std::string out;
  for (const auto& [path, digest] : digests) {
    out += path + "=" + digest.substr(0, 12) + ";";
  }
  return out.empty() ? "(none)" : out;
}

ConformanceCheck::Invocation parse_invocation(const std::string& name) {
  if (name == "task") return ConformanceCheck::Invocation::Task;
  if (name == "help") return ConformanceCheck::Invocation::Help;
  if (name == "bare") return ConformanceCheck::Invocation::Bare;
  throw std::invalid_argument("unknown invocation mode: " + name);
}

struct Assertion {
  bool passed = true;
  std::string failure;
};

Assertion fail(std::string why) { return {false, std::move(why)}; }

Assertion evaluate_expectation(const json& expect, const CheckObservation& obs,
                               const std::map<std::string, std::string>& values) {
  const std::string kind = expect.value("kind", "");
  auto expected_str = [&](const char* key) {
    return substitute(expect.value(key, ""), values);
  };

  if (kind == "exit_status") {
    int want = expect.value("equals", 0);
    if (obs.exit_code != want) {
      return fail("exit status " + std::to_string(obs.exit_code) + " != " + std::to_string(want));
    }
  } else if (kind == "stdout_equals") {
    std::string want = expected_str("value");
    if (obs.stdout_text != want) {
      return fail("stdout " + json(obs.stdout_text).dump() + " != " + json(want).dump());
    }
  } else if (kind == "stdout_contains") {
    std::string want = expected_str("value");
    if (obs.stdout_text.find(want) == std::string::npos) {
      return fail("stdout does not contain " + json(want).dump());
    }
  } else if (kind == "stdout_has_tokens") {
    for (const auto& token : expect.value("tokens", std::vector<std::string>{})) {
      if (obs.stdout_text.find(token) == std::string::npos) {
        return fail("stdout missing token '" + token + "'");
      }
    }
  } else if (kind == "request_count") {
    std::size_t want = expect.value("equals", 0u);
    if (obs.request_count != want) {
      return fail("request count " + std::to_string(obs.request_count) +
                  " != " + std::to_string(want));
    }
  } else if (kind == "request_roles") {
    std::size_t index = expect.value("request", 0u);
    if (index >= obs.request_roles.size()) {
      return fail("no request " + std::to_string(index) + " in log");
    }
    std::vector<std::string> want = expect.value("equals", std::vector<std::string>{});
    if (obs.request_roles[index] != want) {
      return fail("request " + std::to_string(index) + " roles " +
                  roles_to_string({obs.request_roles[index]}) + " != " + roles_to_string({want}));
    }
  } else if (kind == "request_model") {
    std::size_t index = expect.value("request", 0u);
    if (index >= obs.request_models.size()) {
      return fail("no request " + std::to_string(index) + " in log");
    }
    std::string want = expected_str("equals");
    if (obs.request_models[index] != want) {
      return fail("request model '" + obs.request_models[index] + "' != '" + want + "'");
    }
  } else if (kind == "request_body_contains") {
    std::size_t index = expect.value("request", 0u);
    if (index >= obs.request_bodies.size()) {
      return fail("no request " + std::to_string(index) + " in log");
    }
    std::string want = expected_str("value");
    if (obs.request_bodies[index].find(want) == std::string::npos) {
      return fail("request " + std::to_string(index) + " body does not contain " +
                  json(want).dump());
    }
  } else if (kind == "auth_header") {
    std::size_t index = expect.value("request", 0u);
    if (index >= obs.auth_headers.size()) {
      return fail("no request " + std::to_string(index) + " in log");
    }
    std::string want = expected_str("equals");
    if (obs.auth_headers[index] != want) {
      return fail("authorization '" + obs.auth_headers[index] + "' != '" + want + "'");
    }
  } else if (kind == "file_equals") {
    fs::path path = fs::path(obs.workdir) / expect.value("path", "");
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) return fail("file missing: " + expect.value("path", ""));
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::string want = expected_str("value");
    if (content != want) {
      return fail("file " + expect.value("path", "") + " content " + json(content).dump() +
                  " != " + json(want).dump());
    }
  } else if (kind == "file_absent") {
    fs::path path = (fs::path(obs.workdir) / expect.value("path", "")).lexically_normal();
    if (fs::exists(path)) return fail("file should be absent: " + expect.value("path", ""));
  } else {
    return fail("unknown expectation kind: " + kind);
  }
  return {};
}

void collect_file_digests(const fs::path& workdir, std::map<std::string, std::string>& out) {
  std::error_code ec;
  for (fs::recursive_directory_iterator it(workdir, ec), end; it != end && !ec;
       it.increment(ec)) {
    if (it->path().filename().string().starts_with(".")) {
      if (it->is_directory()) it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file()) {
      out[it->path().lexically_relative(workdir).generic_string()] = sha256_file(it->path());
    }
  }
}

CheckObservation run_check_once(const AgentUnderTest& agent, const ConformanceCheck& check) {
  fs::path base = fresh_base_dir();
  fs::path workdir = base / "work";

  MockServer server(Script::parse(check.script));
  int port = 0;
  try {
    port = server.start(0);
  } catch (const BindError& ex) {
    throw HarnessError(ex.what());
  }

  std::map<std::string, std::string> values = {
      {"TASK", check.invocation == ConformanceCheck::Invocation::Help ? "-h" : check.task},
      {"MODEL", check.model},
      {"BASE_URL", "http://127.0.0.1:" + std::to_string(port)},
      {"API_KEY", check.api_key},
      {"MAX_TURNS", std::to_string(check.max_turns)},
      {"CWD", workdir.string()},
  };

  std::vector<std::string> argv;
  for (const auto& raw_token : split_tokens(agent.launch_template)) {
    if (check.invocation == ConformanceCheck::Invocation::Bare && raw_token == "{TASK}") continue;
    argv.push_back(substitute(raw_token, values));
  }
  if (argv.empty()) throw HarnessError("empty launch command");

  // The subject must not pick up harness configuration from the environment.
  auto env = environment_without({"AGENT_", "OPENAI_API_KEY"});

  ProcLimits limits;
  limits.timeout = std::chrono::seconds(60);
  ProcResult proc = run_argv(argv, workdir, limits, env);

  RequestLog log = server.stop();

  CheckObservation obs;
  obs.exit_code = proc.exit_code;
  obs.timed_out = proc.timed_out;
  obs.stdout_text = proc.out;
  obs.stderr_text = proc.err;
  obs.request_count = log.entries.size();
  for (const auto& entry : log.entries) {
    obs.request_bodies.push_back(entry.body);
    obs.auth_headers.push_back(entry.authorization);
    std::vector<std::string> roles;
    std::string model;
    if (entry.request) {
      for (const auto& m : entry.request->messages) roles.emplace_back(role_name(m.role));
      model = entry.request->model;
    } else {
      roles.push_back("undecodable");
    }
    obs.request_roles.push_back(std::move(roles));
    obs.request_models.push_back(std::move(model));
  }
  collect_file_digests(workdir, obs.file_digests);
  obs.prog_tokens = {argv.front(), fs::path(argv.front()).filename().string()};
  obs.workdir = workdir.string();
  return obs;
}

CheckResult evaluate_check(const AgentUnderTest& agent, const ConformanceCheck& check) {
  CheckResult result;
  result.id = check.id;
  result.spec_section = check.spec_section;

  std::map<std::string, std::string> values = {
      {"TASK", check.task}, {"MODEL", check.model}, {"API_KEY", check.api_key},
      {"MAX_TURNS", std::to_string(check.max_turns)},
  };
  result.observation = run_check_once(agent, check);
  result.passed = true;
  for (const auto& expectation : check.expectations) {
    Assertion verdict = evaluate_expectation(expectation, result.observation, values);
    if (!verdict.passed) {
      result.passed = false;
      result.first_failure = verdict.failure;
      break;
    }
  }
  // File expectations read the workdir, so tear down only after evaluation.
  std::error_code ec;
  fs::remove_all(fs::path(result.observation.workdir).parent_path(), ec);
  return result;
}

}  // namespace

void AgentUnderTest::validate() const {
  if (launch_template.find("{BASE_URL}") == std::string::npos ||
      launch_template.find("{TASK}") == std::string::npos) {
    throw std::invalid_argument(
        "launch template must contain {BASE_URL} and {TASK} placeholders");
  }
}

std::vector<ConformanceCheck> parse_checks(const json& document) {
  if (!document.is_array()) throw std::invalid_argument("check suite must be an array");
  std::vector<ConformanceCheck> checks;
  for (const json& c : document) {
    ConformanceCheck check;
    check.id = c.value("id", "");
    check.spec_section = c.value("spec_section", "");
    if (check.id.empty()) throw std::invalid_argument("check without id");
    if (check.spec_section.empty()) {
      throw std::invalid_argument("check '" + check.id + "' without spec_section");
    }
    check.task = c.value("task", "");
    check.model = c.value("model", check.model);
    check.api_key = c.value("api_key", check.api_key);
    check.max_turns = c.value("max_turns", check.max_turns);
    check.invocation = parse_invocation(c.value("invocation", "task"));
    check.stdout_compare = c.value("stdout_compare", "exact") == "flag_tokens"
                               ? ConformanceCheck::StdoutCompare::FlagTokens
                               : ConformanceCheck::StdoutCompare::Exact;
    check.script = c.value("script", json{{"on_exhausted", {{"final_stop", "unused"}}}});
    Script::parse(check.script);  // validate early
    if (c.contains("expect")) {
      for (const json& e : c["expect"]) check.expectations.push_back(e);
    }
    checks.push_back(std::move(check));
  }
  return checks;
}

std::vector<ConformanceCheck> load_checks(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw std::invalid_argument("cannot open check suite: " + path.string());
  return parse_checks(json::parse(in));
}

int ConformanceReport::passed_count() const {
  int n = 0;
  for (const auto& r : results) n += r.passed ? 1 : 0;
  return n;
}

bool ConformanceReport::all_passed() const {
  return passed_count() == static_cast<int>(results.size());
}

double ConformanceReport::pass_ratio() const {
  return results.empty() ? 1.0 : static_cast<double>(passed_count()) / results.size();
}

json ConformanceReport::to_json() const {
  json checks = json::array();
  for (const auto& r : results) {
    checks.push_back({{"id", r.id},
                      {"spec_section", r.spec_section},
                      {"verdict", r.passed ? "pass" : "fail"},
                      {"first_failure", r.first_failure}});
  }
  json cov = json::object();
  for (const auto& [tag, count] : coverage) cov[tag] = count;
  return {{"checks", checks},
          {"coverage", cov},
          {"summary",
           {{"total", results.size()}, {"passed", passed_count()}, {"pass_ratio", pass_ratio()}}}};
}

ConformanceReport run_suite(const AgentUnderTest& agent,
                            const std::vector<ConformanceCheck>& checks) {
  agent.validate();
  if (checks.empty()) throw std::invalid_argument("check list must be non-empty");
  ConformanceReport report;
  for (const auto& check : checks) {
    report.results.push_back(evaluate_check(agent, check));
    report.coverage[check.spec_section] += 1;
  }
  return report;
}

std::string normalize_stdout(std::string_view text, const std::vector<std::string>& prog_tokens,
                             const std::string& workdir) {
  std::string out(text);
  auto replace_all = [&](const std::string& needle, const std::string& with) {
    if (needle.empty()) return;
    std::size_t pos = 0;
    while ((pos = out.find(needle, pos)) != std::string::npos) {
      out.replace(pos, needle.size(), with);
      pos += with.size();
    }
  };
  replace_all(workdir, "WORKDIR");
  for (const auto& token : prog_tokens) replace_all(token, "PROG");
  // Collapse whitespace runs.
  std::string collapsed;
  bool in_space = true;
  for (char c : out) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) collapsed.push_back(' ');
      in_space = true;
    } else {
      collapsed.push_back(c);
      in_space = false;
    }
  }
  if (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  return collapsed;
}

std::set<std::string> usage_flag_tokens(std::string_view text) {
  std::set<std::string> tokens;
  for (const auto& raw : split_tokens(std::string(text))) {
    std::string token = trim_decor(raw);
    if (token.empty()) continue;
    if (token[0] == '-' || token == "task") tokens.insert(token);
  }
  return tokens;
}

DivergenceReport compare_agents(const AgentUnderTest& a, const AgentUnderTest& b,
                                const std::vector<ConformanceCheck>& checks) {
  a.validate();
  b.validate();
  DivergenceReport report;
  report.checks_compared = checks.size();
  for (const auto& check : checks) {
    CheckResult ra = evaluate_check(a, check);
    CheckResult rb = evaluate_check(b, check);

    std::vector<ObservableDiff> diffs;
    auto trim = [](const std::string& value) {
      return value.size() <= 200 ? value
                                 : value.substr(0, 200) + "... (" +
                                       std::to_string(value.size() - 200) + " more bytes)";
    };
    auto diff = [&](const char* what, const std::string& va, const std::string& vb) {
      if (va != vb) diffs.push_back({what, trim(va), trim(vb)});
    };
    diff("exit_status", std::to_string(ra.observation.exit_code),
         std::to_string(rb.observation.exit_code));
    if (check.stdout_compare == ConformanceCheck::StdoutCompare::FlagTokens) {
      // Two correct implementations may format usage differently and list
      // extra surfaces; only the spec's own tokens are compared.
      auto keep_normative = [](std::set<std::string> tokens) {
        std::set<std::string> kept;
        for (const auto& t : tokens) {
          if (kNormativeUsageTokens.count(t)) kept.insert(t);
        }
        return kept;
      };
      auto ta = keep_normative(usage_flag_tokens(ra.observation.stdout_text));
      auto tb = keep_normative(usage_flag_tokens(rb.observation.stdout_text));
      std::string sa, sb;
      for (const auto& t : ta) sa += t + " ";
      for (const auto& t : tb) sb += t + " ";
      diff("stdout_flag_tokens", sa, sb);
    } else {
      diff("stdout",
           normalize_stdout(ra.observation.stdout_text, ra.observation.prog_tokens,
                            ra.observation.workdir),
           normalize_stdout(rb.observation.stdout_text, rb.observation.prog_tokens,
                            rb.observation.workdir));
    }
    diff("request_count", std::to_string(ra.observation.request_count),
         std::to_string(rb.observation.request_count));
    diff("request_roles", roles_to_string(ra.observation.request_roles),
         roles_to_string(rb.observation.request_roles));
    diff("file_effects", digests_to_string(ra.observation.file_digests),
         digests_to_string(rb.observation.file_digests));

    if (ra.passed != rb.passed || !diffs.empty()) {
      report.divergent.push_back({check.id, ra.passed ? "pass" : "fail",
                                  rb.passed ? "pass" : "fail", std::move(diffs)});
    }
  }
  return report;
}

json DivergenceReport::to_json() const {
  json items = json::array();
  for (const auto& d : divergent) {
    json diffs = json::array();
    for (const auto& o : d.diffs) {
      diffs.push_back({{"observable", o.observable}, {"a", o.a}, {"b", o.b}});
    }
    items.push_back({{"id", d.id},
                     {"verdict_a", d.verdict_a},
                     {"verdict_b", d.verdict_b},
                     {"diffs", diffs}});
  }
  return {{"divergent", items}, {"checks_compared", checks_compared}};
}

std::map<std::string, int> coverage_report(const std::vector<ConformanceCheck>& checks,
                                           const SpecDocument& spec) {
  std::map<std::string, int> coverage;
  for (const auto& section : spec.sections) coverage[section.tag] = 0;
  for (const auto& check : checks) {
    auto it = coverage.find(check.spec_section);
    if (it == coverage.end()) throw UnknownSectionError(check.id, check.spec_section);
    it->second += 1;
  }
  return coverage;
}

}  // namespace minagent
