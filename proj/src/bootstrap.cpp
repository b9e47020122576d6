// SPDX-License-Identifier: Apache-2.0
#include "minagent/bootstrap.hpp"

#include <algorithm>
#include <sstream>

#include "minagent/digest.hpp"
#include "minagent/proc.hpp"
#include "minagent/toolbox.hpp"

namespace minagent {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string catalog_digest() {
  json tools = json::array();
  for (const auto& spec : tool_catalog()) {
    tools.push_back({{"type", "function"},
                     {"function", {{"name", spec.name},
                                   {"description", spec.description},
                                   {"parameters", spec.parameters}}}});
  }
  return sha256_hex(tools.dump());
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

// Newest trajectory the generator run left behind, if any.
std::optional<fs::path> find_trajectory(const fs::path& workdir) {
  fs::path dir = workdir / ".agent";
  std::error_code ec;
  std::optional<fs::path> newest;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename().string().ends_with(".traj.jsonl")) {
      if (!newest || entry.path().filename() > newest->filename()) newest = entry.path();
    }
  }
  return newest;
}

}  // namespace

AgentArtifact generate_implementation(const GenerationJob& job) {
  job.generator.validate();
  if (job.pinned_model.empty()) throw std::invalid_argument("pinned_model must be non-empty");
  if (!fs::is_regular_file(job.spec_path)) {
    throw std::invalid_argument("spec not readable: " + job.spec_path.string());
  }
  std::error_code ec;
  fs::create_directories(job.workdir, ec);
  if (ec || !fs::is_directory(job.workdir)) {
    throw std::invalid_argument("cannot create workdir: " + job.workdir.string());
  }
  if (!fs::is_empty(job.workdir)) {
    throw std::invalid_argument("workdir must be empty: " + job.workdir.string());
  }

  const std::string spec_name = job.spec_path.filename().string();
  fs::copy_file(job.spec_path, job.workdir / spec_name);

  std::map<std::string, std::string> values = {
      {"TASK", job.prompt},
      {"MODEL", job.pinned_model},
      {"BASE_URL", job.base_url},
      {"API_KEY", job.api_key},
      {"MAX_TURNS", std::to_string(job.max_turns)},
      {"CWD", fs::absolute(job.workdir).string()},
  };
  std::vector<std::string> argv;
  std::istringstream in(job.generator.launch_template);
  std::string token;
  while (in >> token) argv.push_back(substitute(token, values));

  ProcLimits limits;
  limits.timeout = std::chrono::duration_cast<std::chrono::milliseconds>(job.timeout);
  ProcResult result = run_argv(argv, job.workdir, limits, environment_without({"AGENT_", "OPENAI_API_KEY"}));
  if (result.timed_out || result.exit_code != 0) {
    std::string detail = result.timed_out ? "timed out" : "exit " + std::to_string(result.exit_code);
    std::string err = result.err.substr(0, 300);
    throw BootstrapError(BootstrapError::Kind::GeneratorFailed,
                         "generator failed (" + detail + "): " + err);
  }

  // The default prompt licenses a uniqueness rule: exactly one new program
  // file at the workdir root.
  std::vector<std::string> candidates;
  for (const auto& entry : fs::directory_iterator(job.workdir)) {
    std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || name.starts_with(".") || name == spec_name) continue;
    candidates.push_back(name);
  }
  std::sort(candidates.begin(), candidates.end());
  if (candidates.empty()) {
    throw BootstrapError(BootstrapError::Kind::NoArtifactProduced,
                         "generator produced no entry file in " + job.workdir.string());
  }
  if (candidates.size() > 1) {
    std::string list;
    for (const auto& c : candidates) list += (list.empty() ? "" : ", ") + c;
    throw BootstrapError(BootstrapError::Kind::AmbiguousArtifact,
                         "multiple candidate entry files: " + list, candidates);
  }

  AgentArtifact artifact;
  artifact.entry_path = fs::absolute(job.workdir / candidates.front());

  std::string entry = artifact.entry_path.string();
  std::string runner = entry.ends_with(".py") ? "python3 " + entry : entry;
  artifact.launch_template = runner +
                             " --model {MODEL} --base-url {BASE_URL} --api-key {API_KEY}"
                             " --max-turns {MAX_TURNS} --cwd {CWD} {TASK}";

  ProvenanceRecord record;
  record.spec_digest = sha256_file(job.workdir / spec_name);
  record.model = job.pinned_model;
  record.base_url = job.base_url;
  record.tool_catalog_digest = catalog_digest();
  if (auto trajectory = find_trajectory(job.workdir)) {
    auto events = read_trajectory(*trajectory);
    record.trajectory_digest = trajectory_digest(events);
  }
  for (fs::recursive_directory_iterator it(job.workdir), end; it != end; ++it) {
    if (it->is_regular_file()) {
      record.artifact_digests[it->path().lexically_relative(job.workdir).generic_string()] =
          sha256_file(it->path());
    }
  }
  artifact.provenance = std::move(record);
  return artifact;
}

FixedPointVerdict verify_fixed_point(const AgentUnderTest& a0, const AgentUnderTest& a1,
                                     const std::vector<ConformanceCheck>& checks) {
  FixedPointVerdict verdict;
  verdict.report_a = run_suite(a0, checks);
  verdict.report_b = run_suite(a1, checks);
  verdict.divergence = compare_agents(a0, a1, checks);
  verdict.holds = verdict.report_a.all_passed() && verdict.report_b.all_passed() &&
                  verdict.divergence.empty();
  return verdict;
}

json FixedPointVerdict::to_json() const {
  return {{"holds", holds},
          {"a", report_a.to_json()},
          {"b", report_b.to_json()},
          {"divergence", divergence.to_json()}};
}

}  // namespace minagent
