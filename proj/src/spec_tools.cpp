// SPDX-License-Identifier: Apache-2.0
#include "minagent/spec_tools.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace minagent {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Drop a leading heading marker (run of '#') or list bullet ('-' or '*')
// when it stands alone before whitespace or end of line.
std::string_view strip_line_markers(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  std::size_t start = i;
  if (i < line.size() && line[i] == '#') {
    while (i < line.size() && line[i] == '#') ++i;
    if (i == line.size() || is_space(line[i])) return line.substr(i);
    return line.substr(start);
  }
  if (i < line.size() && (line[i] == '-' || line[i] == '*')) {
    ++i;
    if (i == line.size() || is_space(line[i])) return line.substr(i);
  }
  return line.substr(start);
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Whole-word, case-insensitive containment; `term` is already lowercase and
// may span several words ("hash map").
bool contains_term(const std::string& lower_sentence, const std::string& term) {
  std::size_t pos = 0;
  while ((pos = lower_sentence.find(term, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !word_char(lower_sentence[pos - 1]);
    std::size_t end = pos + term.size();
    bool right_ok = end >= lower_sentence.size() || !word_char(lower_sentence[end]);
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

// Sentences: maximal chunks ending in '.', '!' or '?'; a trailing chunk
// without a terminator is a sentence too.
std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::string current;
  for (char c : text) {
    current.push_back(c == '\n' ? ' ' : c);
    if (c == '.' || c == '!' || c == '?') {
      sentences.push_back(current);
      current.clear();
    }
  }
  if (current.find_first_not_of(" \t\n") != std::string::npos) sentences.push_back(current);
  return sentences;
}

std::string sentence_excerpt(const std::string& sentence) {
  std::string trimmed;
  bool in_space = true;
  for (char c : sentence) {
    if (is_space(c)) {
      if (!in_space) trimmed.push_back(' ');
      in_space = true;
    } else {
      trimmed.push_back(c);
      in_space = false;
    }
  }
  if (!trimmed.empty() && trimmed.back() == ' ') trimmed.pop_back();
  if (trimmed.size() > 60) trimmed = trimmed.substr(0, 60) + "...";
  return trimmed;
}

}  // namespace

int word_count_text(std::string_view text) {
  int count = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line =
        eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
    std::string_view stripped = strip_line_markers(line);
    bool in_word = false;
    for (char c : stripped) {
      if (is_space(c)) {
        in_word = false;
      } else if (!in_word) {
        in_word = true;
        ++count;
      }
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return count;
}

SpecDocument SpecDocument::parse(std::string source) {
  SpecDocument document;
  document.source = std::move(source);
  document.word_count = word_count_text(document.source);

  std::istringstream in(document.source);
  std::string line;
  SpecSection* current = nullptr;
  while (std::getline(in, line)) {
    if (line.rfind("## ", 0) == 0) {
      std::size_t colon = line.find(':', 3);
      if (colon != std::string::npos) {
        std::string tag = line.substr(3, colon - 3);
        std::size_t heading_start = colon + 1;
        while (heading_start < line.size() && is_space(line[heading_start])) ++heading_start;
        // Tags are single tokens; anything else is body text.
        if (!tag.empty() && tag.find(' ') == std::string::npos) {
          document.sections.push_back({tag, line.substr(heading_start), ""});
          current = &document.sections.back();
          continue;
        }
      }
    }
    if (current) {
      current->body += line;
      current->body += "\n";
    }
  }
  return document;
}

SpecDocument SpecDocument::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw std::runtime_error("cannot open spec document: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(std::move(text));
}

std::vector<std::string> load_denylist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw std::runtime_error("cannot open denylist: " + path.string());
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    std::size_t end = line.find_last_not_of(" \t\r");
    terms.push_back(lowercase(line.substr(begin, end - begin + 1)));
  }
  return terms;
}

LintConfig LintConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw std::runtime_error("cannot open lint config: " + path.string());
  nlohmann::json payload = nlohmann::json::parse(in);
  LintConfig config;
  config.max_words = payload.value("max_words", config.max_words);
  config.wpm = payload.value("wpm", config.wpm);
  if (payload.contains("denylist")) {
    std::filesystem::path deny = payload["denylist"].get<std::string>();
    if (deny.is_relative()) deny = path.parent_path() / deny;
    config.denylist = load_denylist(deny);
  }
  return config;
}

LintReport lint_spec(const SpecDocument& document, const LintConfig& config) {
  LintReport report;
  auto add = [&](const char* rule, LintFinding::Severity severity, std::string location,
                 std::string message) {
    if (severity == LintFinding::Severity::Error) report.pass = false;
    report.findings.push_back({rule, severity, std::move(location), std::move(message)});
  };

  if (document.word_count > config.max_words) {
    add("R1", LintFinding::Severity::Error, "document",
        "word count " + std::to_string(document.word_count) + " exceeds budget " +
            std::to_string(config.max_words));
  }
  double minutes = config.wpm > 0 ? static_cast<double>(document.word_count) / config.wpm : 0.0;
  if (minutes > config.max_minutes) {
    add("R2", LintFinding::Severity::Warn, "document",
        "estimated reading time " + std::to_string(minutes).substr(0, 4) + " min exceeds " +
            std::to_string(config.max_minutes) + " min");
  }

  if (document.sections.empty()) {
    add("R4", LintFinding::Severity::Error, "document", "no sections found");
  }
  std::set<std::string> seen;
  for (const auto& section : document.sections) {
    if (!seen.insert(section.tag).second) {
      add("R4", LintFinding::Severity::Error, "section " + section.tag,
          "duplicate section tag '" + section.tag + "'");
    }
    if (section.body.find_first_not_of(" \t\r\n") == std::string::npos) {
      add("R4", LintFinding::Severity::Error, "section " + section.tag,
          "section '" + section.tag + "' has an empty body");
    }
  }

  if (!config.denylist.empty()) {
    auto sentences = split_sentences(document.source);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      std::string lower = lowercase(sentences[i]);
      std::string matched;
      for (const auto& term : config.denylist) {
        if (term.empty() || !contains_term(lower, term)) continue;
        if (!matched.empty()) matched += ", ";
        matched += "'" + term + "'";
      }
      if (!matched.empty()) {
        add("R3", LintFinding::Severity::Warn, "sentence " + std::to_string(i + 1),
            "implementation term " + matched + " in: \"" + sentence_excerpt(sentences[i]) + "\"");
      }
    }
  }
  return report;
}

nlohmann::json LintReport::to_json() const {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& finding : findings) {
    items.push_back({{"rule", finding.rule},
                     {"severity",
                      finding.severity == LintFinding::Severity::Error ? "error" : "warn"},
                     {"location", finding.location},
                     {"message", finding.message}});
  }
  return {{"findings", items}, {"pass", pass}};
}

}  // namespace minagent
