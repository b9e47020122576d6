// SPDX-License-Identifier: Apache-2.0
#include "minagent/cli.hpp"

#include <signal.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "minagent/bootstrap.hpp"
#include "minagent/conformance.hpp"
#include "minagent/digest.hpp"
#include "minagent/llm_backend.hpp"
#include "minagent/mock_server.hpp"
#include "minagent/spec_tools.hpp"

namespace minagent {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::atomic<std::uint64_t> g_run_counter{0};

std::optional<std::string> env_get(const std::map<std::string, std::string>& env,
                                   const std::string& name) {
  auto it = env.find(name);
  if (it == env.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::map<std::string, std::string> process_env(std::initializer_list<const char*> names) {
  std::map<std::string, std::string> env;
  for (const char* name : names) {
    if (const char* value = std::getenv(name)) env[name] = value;
  }
  return env;
}

bool parse_int_strict(const std::string& text, int& out) {
  if (text.empty()) return false;
  std::size_t i = text[0] == '-' || text[0] == '+' ? 1 : 0;
  if (i == text.size()) return false;
  long value = 0;
  for (; i < text.size(); ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
    value = value * 10 + (text[i] - '0');
    if (value > 1'000'000'000) return false;
  }
  out = static_cast<int>(text[0] == '-' ? -value : value);
  return true;
}

RetryPolicy retry_policy_from_env() {
  RetryPolicy policy;
  if (const char* raw = std::getenv("AGENT_RETRY_MAX_ATTEMPTS")) {
    int attempts = 0;
    if (parse_int_strict(raw, attempts) && attempts >= 1) policy.max_attempts = attempts;
  }
  if (const char* raw = std::getenv("AGENT_RETRY_BACKOFF_MS")) {
    std::vector<std::chrono::milliseconds> backoff;
    std::string item;
    std::istringstream in(raw);
    while (std::getline(in, item, ',')) {
      int ms = 0;
      if (parse_int_strict(item, ms) && ms >= 0) backoff.emplace_back(ms);
    }
    if (!backoff.empty()) policy.backoff = std::move(backoff);
  }
  while (static_cast<int>(policy.backoff.size()) < policy.max_attempts - 1) {
    policy.backoff.push_back(policy.backoff.empty() ? std::chrono::milliseconds(1000)
                                                    : policy.backoff.back());
  }
  return policy;
}

// ---------------------------------------------------------------------------
// run subcommand

int dispatch_run(const RunInvocation& invocation) {
  const AgentConfig& config = invocation.config;
  std::error_code ec;
  if (!fs::is_directory(config.cwd, ec)) {
    std::cerr << "agent: working directory does not exist: " << config.cwd.string() << "\n";
    return 4;
  }

  try {
    Sandbox sandbox(config.cwd);

    fs::path traj_dir;
    if (const char* override_dir = std::getenv("AGENT_TRAJ_DIR")) {
      traj_dir = fs::path(override_dir);
      if (traj_dir.is_relative()) traj_dir = sandbox.root() / traj_dir;
    } else {
      traj_dir = sandbox.root() / ".agent";
    }
    fs::create_directories(traj_dir, ec);
    if (ec) {
      std::cerr << "agent: cannot create trajectory directory: " << traj_dir.string() << "\n";
      return 4;
    }
    std::string stamp = rfc3339_utc_now();
    std::erase_if(stamp, [](char c) { return c == '-' || c == ':' || c == '.'; });
    fs::path traj_file = traj_dir / ("run-" + stamp + "-" + std::to_string(getpid()) + "-" +
                                     std::to_string(g_run_counter.fetch_add(1)) + ".traj.jsonl");
    TrajectorySink sink(traj_file);

    BackendConfig backend_config;
    backend_config.base_url = config.base_url;
    backend_config.api_key = config.api_key;
    backend_config.retry = retry_policy_from_env();
    HttpBackend backend(backend_config);

    AgentConfig resolved = config;
    resolved.cwd = sandbox.root();
    RunOutcome outcome = run_agent(resolved, backend, sandbox, &sink);

    ProvenanceRecord record;
    record.spec_digest = sha256_hex(config.task);
    record.model = config.model;
    record.base_url = config.base_url;
    {
      json tools = json::array();
      for (const auto& spec : tool_catalog()) {
        tools.push_back({{"type", "function"},
                         {"function", {{"name", spec.name},
                                       {"description", spec.description},
                                       {"parameters", spec.parameters}}}});
      }
      record.tool_catalog_digest = sha256_hex(tools.dump());
    }
    auto events = read_trajectory(traj_file);
    record.trajectory_digest = trajectory_digest(events);
    for (const auto& rel : sandbox.written_files()) {
      fs::path path = sandbox.root() / rel;
      if (fs::is_regular_file(path)) record.artifact_digests[rel] = sha256_file(path);
    }
    write_provenance(traj_dir / "provenance.json", record);

    switch (outcome.status) {
      case RunStatus::Completed:
        std::cout << *outcome.final_text << "\n";
        return 0;
      case RunStatus::TurnLimit:
        std::cerr << "agent: turn limit reached after " << outcome.turns_used << " turns\n";
        return 2;
      case RunStatus::ApiFailure:
        std::cerr << "agent: api failure: " << outcome.failure_detail << "\n";
        return 3;
    }
    return 3;
  } catch (const std::exception& ex) {
    std::cerr << "agent: " << ex.what() << "\n";
    return 4;
  }
}

// ---------------------------------------------------------------------------
// auxiliary subcommand plumbing

struct SubArgs {
  std::map<std::string, std::string> values;
  bool help = false;
};

// Every auxiliary option takes a value; returns nullopt on a surface error.
std::optional<SubArgs> parse_sub_args(const std::vector<std::string>& args,
                                      const std::set<std::string>& allowed, std::string& error) {
  SubArgs parsed;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "-h" || a == "--help") {
      parsed.help = true;
      return parsed;
    }
    std::string name = a;
    std::string value;
    bool have_value = false;
    if (auto eq = a.find('='); eq != std::string::npos && a.rfind("--", 0) == 0) {
      name = a.substr(0, eq);
      value = a.substr(eq + 1);
      have_value = true;
    }
    if (!allowed.count(name)) {
      error = "unknown option: " + name;
      return std::nullopt;
    }
    if (!have_value) {
      if (i + 1 >= args.size()) {
        error = "option " + name + " needs a value";
        return std::nullopt;
      }
      value = args[++i];
    }
    parsed.values[name] = value;
  }
  return parsed;
}

std::string require_value(const SubArgs& args, const std::string& name, std::string& error) {
  auto it = args.values.find(name);
  if (it == args.values.end()) {
    error = "missing required option " + name;
    return "";
  }
  return it->second;
}

void write_json_file(const fs::path& path, const json& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.is_open()) throw std::runtime_error("cannot write " + path.string());
  out << payload.dump(2) << "\n";
}

int dispatch_serve_mock(const std::vector<std::string>& args) {
  const std::string usage =
      "usage: agent serve-mock --script FILE [--port N] [--log FILE]\n";
  std::string error;
  auto parsed = parse_sub_args(args, {"--script", "--port", "--log"}, error);
  if (!parsed) {
    std::cerr << "agent serve-mock: " << error << "\n" << usage;
    return 1;
  }
  if (parsed->help) {
    std::cout << usage;
    return 0;
  }
  std::string script_path = require_value(*parsed, "--script", error);
  if (!error.empty()) {
    std::cerr << "agent serve-mock: " << error << "\n" << usage;
    return 1;
  }
  int port = 0;
  if (parsed->values.count("--port") && !parse_int_strict(parsed->values["--port"], port)) {
    std::cerr << "agent serve-mock: --port must be an integer\n";
    return 1;
  }

  try {
    MockServer server(Script::load_file(script_path));

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    int bound = server.start(port);
    std::cout << "PORT=" << bound << "\n" << std::flush;

    int received = 0;
    sigwait(&signals, &received);

    RequestLog log = server.stop();
    std::cerr << "agent serve-mock: served " << log.entries.size() << " requests\n";
    if (parsed->values.count("--log")) {
      std::ofstream out(parsed->values["--log"], std::ios::binary | std::ios::trunc);
      for (const auto& entry : log.entries) {
        out << json({{"index", entry.index},
                     {"body", entry.body},
                     {"authorization", entry.authorization},
                     {"decode_error", entry.decode_error}})
                   .dump()
            << "\n";
      }
    }
    return 0;
  } catch (const std::exception& ex) {
    std::cerr << "agent serve-mock: " << ex.what() << "\n";
    return 1;
  }
}

void print_report(const ConformanceReport& report) {
  for (const auto& result : report.results) {
    if (result.passed) {
      std::cout << "[PASS] " << result.id << " (" << result.spec_section << ")\n";
    } else {
      std::cout << "[FAIL] " << result.id << " (" << result.spec_section
                << "): " << result.first_failure << "\n";
    }
  }
  std::cout << "passed " << report.passed_count() << "/" << report.results.size() << "\n";
}

int dispatch_conform(const std::vector<std::string>& args) {
  const std::string usage =
      "usage: agent conform --agent-cmd TEMPLATE --checks FILE [--spec FILE] "
      "[--report-json FILE]\n";
  std::string error;
  auto parsed = parse_sub_args(args, {"--agent-cmd", "--checks", "--spec", "--report-json"}, error);
  if (!parsed) {
    std::cerr << "agent conform: " << error << "\n" << usage;
    return 2;
  }
  if (parsed->help) {
    std::cout << usage;
    return 0;
  }
  std::string agent_cmd = require_value(*parsed, "--agent-cmd", error);
  std::string checks_path = require_value(*parsed, "--checks", error);
  if (!error.empty()) {
    std::cerr << "agent conform: " << error << "\n" << usage;
    return 2;
  }

  try {
    AgentUnderTest agent{agent_cmd};
    auto checks = load_checks(checks_path);
    ConformanceReport report = run_suite(agent, checks);
    json report_json = report.to_json();

    print_report(report);
    if (parsed->values.count("--spec")) {
      auto spec = SpecDocument::load_file(parsed->values["--spec"]);
      auto coverage = coverage_report(checks, spec);
      json cov = json::object();
      int gaps = 0;
      for (const auto& [tag, count] : coverage) {
        cov[tag] = count;
        std::cout << "coverage " << tag << ": " << count << (count == 0 ? " GAP" : "") << "\n";
        gaps += count == 0 ? 1 : 0;
      }
      report_json["coverage"] = cov;
      report_json["coverage_gaps"] = gaps;
    }
    if (parsed->values.count("--report-json")) {
      write_json_file(parsed->values["--report-json"], report_json);
    }
    return report.all_passed() ? 0 : 1;
  } catch (const HarnessError& ex) {
    std::cerr << "agent conform: harness failure: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "agent conform: " << ex.what() << "\n";
    return 2;
  }
}

void print_divergence(const DivergenceReport& report) {
  if (report.empty()) {
    std::cout << "no divergence across " << report.checks_compared << " checks\n";
    return;
  }
  for (const auto& d : report.divergent) {
    std::cout << "divergent: " << d.id << " (a=" << d.verdict_a << ", b=" << d.verdict_b << ")\n";
    for (const auto& o : d.diffs) {
      std::cout << "  " << o.observable << ": a=" << o.a << " b=" << o.b << "\n";
    }
  }
  std::cout << report.divergent.size() << "/" << report.checks_compared << " checks diverge\n";
}

int dispatch_diff(const std::vector<std::string>& args, bool fixed_point) {
  const std::string name = fixed_point ? "fixed-point" : "diff";
  const std::string usage =
      "usage: agent " + name + " --a TEMPLATE --b TEMPLATE --checks FILE [--report-json FILE]\n";
  std::string error;
  auto parsed = parse_sub_args(args, {"--a", "--b", "--checks", "--report-json"}, error);
  if (!parsed) {
    std::cerr << "agent " << name << ": " << error << "\n" << usage;
    return 2;
  }
  if (parsed->help) {
    std::cout << usage;
    return 0;
  }
  std::string a_cmd = require_value(*parsed, "--a", error);
  std::string b_cmd = require_value(*parsed, "--b", error);
  std::string checks_path = require_value(*parsed, "--checks", error);
  if (!error.empty()) {
    std::cerr << "agent " << name << ": " << error << "\n" << usage;
    return 2;
  }

  try {
    AgentUnderTest a{a_cmd};
    AgentUnderTest b{b_cmd};
    auto checks = load_checks(checks_path);
    if (fixed_point) {
      FixedPointVerdict verdict = verify_fixed_point(a, b, checks);
      std::cout << "agent a: passed " << verdict.report_a.passed_count() << "/"
                << verdict.report_a.results.size() << "\n";
      std::cout << "agent b: passed " << verdict.report_b.passed_count() << "/"
                << verdict.report_b.results.size() << "\n";
      print_divergence(verdict.divergence);
      std::cout << "fixed point: " << (verdict.holds ? "holds" : "fails") << "\n";
      if (parsed->values.count("--report-json")) {
        write_json_file(parsed->values["--report-json"], verdict.to_json());
      }
      return verdict.holds ? 0 : 1;
    }
    DivergenceReport report = compare_agents(a, b, checks);
    print_divergence(report);
    if (parsed->values.count("--report-json")) {
      write_json_file(parsed->values["--report-json"], report.to_json());
    }
    return report.empty() ? 0 : 1;
  } catch (const HarnessError& ex) {
    std::cerr << "agent " << name << ": harness failure: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "agent " << name << ": " << ex.what() << "\n";
    return 2;
  }
}

int dispatch_lint(const std::vector<std::string>& args) {
  const std::string usage = "usage: agent lint --spec FILE [--config FILE]\n";
  std::string error;
  auto parsed = parse_sub_args(args, {"--spec", "--config"}, error);
  if (!parsed) {
    std::cerr << "agent lint: " << error << "\n" << usage;
    return 2;
  }
  if (parsed->help) {
    std::cout << usage;
    return 0;
  }
  std::string spec_path = require_value(*parsed, "--spec", error);
  if (!error.empty()) {
    std::cerr << "agent lint: " << error << "\n" << usage;
    return 2;
  }

  try {
    SpecDocument document = SpecDocument::load_file(spec_path);
    LintConfig config;
    if (parsed->values.count("--config")) {
      config = LintConfig::load_file(parsed->values["--config"]);
    }
    LintReport report = lint_spec(document, config);
    for (const auto& finding : report.findings) {
      std::cout << (finding.severity == LintFinding::Severity::Error ? "error" : "warn") << " "
                << finding.rule << " @ " << finding.location << ": " << finding.message << "\n";
    }
    std::cout << "lint: " << (report.pass ? "pass" : "fail") << " (" << document.word_count
              << " words, " << document.sections.size() << " sections)\n";
    return report.pass ? 0 : 1;
  } catch (const std::exception& ex) {
    std::cerr << "agent lint: " << ex.what() << "\n";
    return 2;
  }
}

int dispatch_bootstrap(const std::vector<std::string>& args) {
  const std::string usage =
      "usage: agent bootstrap --spec FILE --generator-cmd TEMPLATE --workdir DIR\n"
      "  [--prompt TEXT] [--model ID] [--base-url URL] [--api-key KEY] [--max-turns N]\n"
      "  [--provenance-out FILE]\n";
  std::string error;
  auto parsed = parse_sub_args(args,
                               {"--spec", "--generator-cmd", "--workdir", "--prompt", "--model",
                                "--base-url", "--api-key", "--max-turns", "--provenance-out"},
                               error);
  if (!parsed) {
    std::cerr << "agent bootstrap: " << error << "\n" << usage;
    return 2;
  }
  if (parsed->help) {
    std::cout << usage;
    return 0;
  }
  GenerationJob job;
  job.spec_path = require_value(*parsed, "--spec", error);
  job.generator.launch_template = require_value(*parsed, "--generator-cmd", error);
  job.workdir = require_value(*parsed, "--workdir", error);
  if (!error.empty()) {
    std::cerr << "agent bootstrap: " << error << "\n" << usage;
    return 2;
  }
  if (parsed->values.count("--prompt")) job.prompt = parsed->values["--prompt"];

  auto env = process_env({"AGENT_MODEL", "AGENT_BASE_URL", "AGENT_API_KEY", "OPENAI_API_KEY"});
  job.pinned_model = parsed->values.count("--model") ? parsed->values["--model"]
                                                     : env_get(env, "AGENT_MODEL").value_or("");
  if (job.pinned_model.empty()) {
    std::cerr << "agent bootstrap: no model configured: set --model or AGENT_MODEL\n";
    return 2;
  }
  job.base_url = parsed->values.count("--base-url")
                     ? parsed->values["--base-url"]
                     : env_get(env, "AGENT_BASE_URL").value_or("https://api.openai.com/v1");
  job.api_key = parsed->values.count("--api-key")
                    ? parsed->values["--api-key"]
                    : env_get(env, "AGENT_API_KEY")
                          .value_or(env_get(env, "OPENAI_API_KEY").value_or(""));
  if (parsed->values.count("--max-turns") &&
      !parse_int_strict(parsed->values["--max-turns"], job.max_turns)) {
    std::cerr << "agent bootstrap: --max-turns must be an integer\n";
    return 2;
  }

  try {
    AgentArtifact artifact = generate_implementation(job);
    fs::path out = parsed->values.count("--provenance-out")
                       ? fs::path(parsed->values["--provenance-out"])
                       : job.workdir.parent_path() /
                             (job.workdir.filename().string() + ".provenance.json");
    write_provenance(out, artifact.provenance);
    std::cout << "entry: " << artifact.entry_path.string() << "\n";
    std::cout << "launch: " << artifact.launch_template << "\n";
    std::cout << "provenance: " << out.string() << "\n";
    return 0;
  } catch (const BootstrapError& ex) {
    std::cerr << "agent bootstrap: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "agent bootstrap: " << ex.what() << "\n";
    return 2;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// run-surface parsing

std::string run_usage_text(std::string_view prog) {
  std::string text;
  text += "usage: " + std::string(prog) + " [-h] [--model MODEL]\n";
  text += "  [--base-url BASE_URL] [--api-key API_KEY]\n";
#ifdef MINAGENT_MUTANT_NO_MAX_TURNS
  text += "  [--cwd CWD]\n";
#else
  text += "  [--max-turns MAX_TURNS] [--cwd CWD]\n";
#endif
  text += "  [task]\n";
  return text;
}

std::string run_help_text(std::string_view prog) {
  std::string text = run_usage_text(prog);
  text += "\n";
  text += "Reads a natural-language task, works on it with tools inside the working\n";
  text += "directory, and prints the final answer to standard output.\n";
  text += "\n";
  text += "options:\n";
  text += "  --model MODEL          model identifier (env AGENT_MODEL)\n";
  text += "  --base-url BASE_URL    chat-completions endpoint (env AGENT_BASE_URL)\n";
  text += "  --api-key API_KEY      bearer token (env AGENT_API_KEY or OPENAI_API_KEY)\n";
#ifndef MINAGENT_MUTANT_NO_MAX_TURNS
  text += "  --max-turns MAX_TURNS  model-call budget, default 40 (env AGENT_MAX_TURNS)\n";
#endif
  text += "  --cwd CWD              working directory, default . (env AGENT_CWD)\n";
  text += "\n";
  text += "subcommands: serve-mock, conform, diff, lint, bootstrap, fixed-point\n";
  text += "  (each accepts --help for its surface)\n";
  return text;
}

RunParse parse_run_args(const std::vector<std::string>& args,
                        const std::map<std::string, std::string>& env, std::string_view prog) {
  std::optional<std::string> model, base_url, api_key, max_turns_raw, cwd, task;

  auto take_value = [&](std::size_t& i, const std::string& name,
                        std::optional<std::string>& slot) -> std::optional<UsageExit> {
    if (i + 1 >= args.size()) {
      return UsageExit{"error: option " + name + " needs a value\n" + run_usage_text(prog), 1,
                       true};
    }
    slot = args[++i];
    return std::nullopt;
  };

  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "-h" || a == "--help") return UsageExit{run_help_text(prog), 0, false};

    std::string name = a;
    std::optional<std::string> inline_value;
    if (auto eq = a.find('='); eq != std::string::npos && a.rfind("--", 0) == 0) {
      name = a.substr(0, eq);
      inline_value = a.substr(eq + 1);
    }

    std::optional<std::string>* slot = nullptr;
    if (name == "--model") slot = &model;
    else if (name == "--base-url") slot = &base_url;
    else if (name == "--api-key") slot = &api_key;
    else if (name == "--cwd") slot = &cwd;
#ifndef MINAGENT_MUTANT_NO_MAX_TURNS
    else if (name == "--max-turns") slot = &max_turns_raw;
#endif

    if (slot) {
      if (inline_value) {
        *slot = *inline_value;
      } else if (auto missing = take_value(i, name, *slot)) {
        return *missing;
      }
      continue;
    }
#ifdef MINAGENT_MUTANT_NO_MAX_TURNS
    // The mutant tolerates the token so harness templates still launch, but
    // the flag is gone from its surface and has no effect.
    if (name == "--max-turns") {
      if (!inline_value && i + 1 < args.size()) ++i;
      continue;
    }
#endif
    if (!a.empty() && a[0] == '-' && a != "-") {
      return UsageExit{"error: unknown option: " + a + "\n" + run_usage_text(prog), 1, true};
    }
    if (task) {
      return UsageExit{"error: unexpected extra argument: " + a + "\n" + run_usage_text(prog), 1,
                       true};
    }
    task = a;
  }

  if (!task || task->empty()) {
    // The listing behavior: a bare invocation prints usage and exits nonzero.
    return UsageExit{run_usage_text(prog), 1, false};
  }

  RunInvocation invocation;
  auto resolve = [&](const std::optional<std::string>& flag_value,
                     std::initializer_list<const char*> env_names, const std::string& fallback,
                     const char* option) {
    if (flag_value) {
      invocation.provenance[option] = "flag";
      return *flag_value;
    }
    for (const char* name : env_names) {
      if (auto value = env_get(env, name)) {
        invocation.provenance[option] = "environment";
        return *value;
      }
    }
    invocation.provenance[option] = "default";
    return fallback;
  };

  invocation.config.task = *task;
  invocation.config.model = resolve(model, {"AGENT_MODEL"}, "", "model");
  invocation.config.base_url =
      resolve(base_url, {"AGENT_BASE_URL"}, "https://api.openai.com/v1", "base_url");
  invocation.config.api_key =
      resolve(api_key, {"AGENT_API_KEY", "OPENAI_API_KEY"}, "", "api_key");
  invocation.config.cwd = resolve(cwd, {"AGENT_CWD"}, ".", "cwd");

#ifdef MINAGENT_MUTANT_NO_MAX_TURNS
  invocation.config.max_turns = 40;
  invocation.provenance["max_turns"] = "default";
#else
  std::string turns_text = resolve(max_turns_raw, {"AGENT_MAX_TURNS"}, "40", "max_turns");
  int turns = 0;
  if (!parse_int_strict(turns_text, turns) || turns < 1) {
    return UsageExit{"error: --max-turns (or AGENT_MAX_TURNS) must be a positive integer\n" +
                         run_usage_text(prog),
                     1, true};
  }
  invocation.config.max_turns = turns;
#endif

  if (invocation.config.model.empty()) {
    return UsageExit{"error: no model configured: set --model or AGENT_MODEL\n", 1, true};
  }
  return invocation;
}

int run_cli(int argc, char** argv) {
  std::string prog = argc > 0 ? fs::path(argv[0]).filename().string() : "agent";
  std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);

  if (!args.empty()) {
    const std::string& sub = args.front();
    std::vector<std::string> rest(args.begin() + 1, args.end());
    if (sub == "serve-mock") return dispatch_serve_mock(rest);
    if (sub == "conform") return dispatch_conform(rest);
    if (sub == "diff") return dispatch_diff(rest, false);
    if (sub == "fixed-point") return dispatch_diff(rest, true);
    if (sub == "lint") return dispatch_lint(rest);
    if (sub == "bootstrap") return dispatch_bootstrap(rest);
    if (sub == "run") args = rest;
  }

  auto env = process_env({"AGENT_MODEL", "AGENT_BASE_URL", "AGENT_API_KEY", "OPENAI_API_KEY",
                          "AGENT_MAX_TURNS", "AGENT_CWD"});
  RunParse parsed = parse_run_args(args, env, prog);
  if (const UsageExit* usage = std::get_if<UsageExit>(&parsed)) {
    (usage->to_stderr ? std::cerr : std::cout) << usage->text;
    return usage->code;
  }
  return dispatch_run(std::get<RunInvocation>(parsed));
}

}  // namespace minagent
