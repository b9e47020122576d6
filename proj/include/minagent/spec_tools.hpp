// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace minagent {

struct SpecSection {
  std::string tag;
  std::string heading;
  std::string body;
};

/// A specification document of record: markdown-like text whose sections are
/// delimited by lines of the form `## <tag>: <heading>`.
struct SpecDocument {
  std::string source;
  std::vector<SpecSection> sections;
  int word_count = 0;

  static SpecDocument parse(std::string source);
  static SpecDocument load_file(const std::filesystem::path& path);
};

/// Whitespace-token count after stripping heading markers and list bullets.
int word_count_text(std::string_view text);

struct LintFinding {
  std::string rule;  // R1..R4
  enum class Severity { Error, Warn } severity = Severity::Warn;
  std::string location;
  std::string message;
};

struct LintReport {
  std::vector<LintFinding> findings;
  bool pass = true;  // no error findings

  nlohmann::json to_json() const;
};

struct LintConfig {
  int max_words = 1500;
  int wpm = 200;         // reading-speed model
  int max_minutes = 15;
  std::vector<std::string> denylist;  // lowercase implementation terms

  /// JSON file {"max_words":N,"wpm":N,"denylist":"path"}; the denylist path
  /// is resolved relative to the config file.
  static LintConfig load_file(const std::filesystem::path& path);
};

/// One lowercase term per line; blank lines and `#` comments ignored.
std::vector<std::string> load_denylist(const std::filesystem::path& path);

/// R1 size error, R2 reading-time warning, R3 implementation-term warnings
/// per sentence, R4 structure errors. Deterministic for fixed inputs.
LintReport lint_spec(const SpecDocument& document, const LintConfig& config);

}  // namespace minagent
