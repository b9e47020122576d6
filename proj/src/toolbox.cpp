// SPDX-License-Identifier: Apache-2.0
#include "minagent/toolbox.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "minagent/proc.hpp"

namespace minagent {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class ToolFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string require_string(const json& args, const char* key) {
  if (!args.contains(key)) {
    throw ToolFailure(std::string("invalid arguments: missing required parameter '") + key + "'");
  }
  if (!args[key].is_string()) {
    throw ToolFailure(std::string("invalid arguments: parameter '") + key + "' must be a string");
  }
  return args[key].get<std::string>();
}

json schema(std::initializer_list<std::pair<const char*, const char*>> props,
            std::initializer_list<const char*> required) {
  json properties = json::object();
  for (const auto& [name, type] : props) properties[name] = {{"type", type}};
  json req = json::array();
  for (const char* name : required) req.push_back(name);
  return {{"type", "object"}, {"properties", properties}, {"required", req}};
}

// True when `prefix` is `path` or an ancestor of it (both canonical).
bool is_within(const fs::path& prefix, const fs::path& path) {
  auto pi = prefix.begin();
  auto fi = path.begin();
  for (; pi != prefix.end(); ++pi, ++fi) {
    if (fi == path.end() || *pi != *fi) return false;
  }
  return true;
}

}  // namespace

std::vector<ToolSpec> tool_catalog() {
  return {
      {"read_file", "Read a file relative to the working directory and return its contents.",
       schema({{"path", "string"}}, {"path"})},
      {"write_file",
       "Create or overwrite a file relative to the working directory, creating parent "
       "directories as needed.",
       schema({{"path", "string"}, {"content", "string"}}, {"path", "content"})},
      {"list_files",
       "List a directory relative to the working directory, one entry per line, "
       "directories suffixed with '/'. Defaults to the working directory itself.",
       schema({{"path", "string"}}, {})},
      {"run_shell",
       "Run a shell command with the working directory as its current directory and "
       "return its exit status and output.",
       schema({{"command", "string"}, {"timeout_s", "number"}}, {"command"})},
  };
}

Sandbox::Sandbox(const fs::path& root, SandboxOptions options) : options_(options) {
  std::error_code ec;
  root_ = fs::canonical(root, ec);
  if (ec || !fs::is_directory(root_)) {
    throw std::invalid_argument("sandbox root is not an existing directory: " + root.string());
  }
  if (options_.output_cap == 0) throw std::invalid_argument("output_cap must be positive");
}

fs::path Sandbox::resolve_path(std::string_view relative) const {
  if (relative.empty()) throw PathEscapeError("empty path");
  fs::path requested{std::string(relative)};
  if (requested.is_absolute()) {
    throw PathEscapeError("absolute path not allowed: " + std::string(relative));
  }
  fs::path joined = (root_ / requested).lexically_normal();
  if (!is_within(root_, joined)) {
    throw PathEscapeError("path escapes working directory: " + std::string(relative));
  }
  // Resolve symlinks in the existing prefix; the target itself may not exist yet.
  std::error_code ec;
  fs::path resolved = fs::weakly_canonical(joined, ec);
  if (ec) throw PathEscapeError("path cannot be resolved: " + std::string(relative));
  if (!is_within(root_, resolved)) {
    throw PathEscapeError("path escapes working directory: " + std::string(relative));
  }
  return resolved;
}

std::string Sandbox::run_read_file(const json& args) {
  std::string rel = require_string(args, "path");
  fs::path path = resolve_path(rel);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw ToolFailure("file not found: " + rel);
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw ToolFailure("file not found: " + rel);
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

std::string Sandbox::run_write_file(const json& args) {
  std::string rel = require_string(args, "path");
  std::string content = require_string(args, "content");
  fs::path path = resolve_path(rel);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.is_open()) throw ToolFailure("cannot write file: " + rel);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out.good()) throw ToolFailure("write failed: " + rel);
  std::string normalized = path.lexically_relative(root_).generic_string();
  if (std::find(written_.begin(), written_.end(), normalized) == written_.end()) {
    written_.push_back(normalized);
  }
  return "ok: wrote " + std::to_string(content.size()) + " bytes";
}

std::string Sandbox::run_list_files(const json& args) {
  std::string rel = ".";
  if (args.contains("path")) {
    if (!args["path"].is_string()) throw ToolFailure("invalid arguments: parameter 'path' must be a string");
    rel = args["path"].get<std::string>();
  }
  fs::path dir = resolve_path(rel);
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw ToolFailure("not a directory: " + rel);
  std::vector<std::string> entries;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    std::string name = entry.path().filename().string();
    if (entry.is_directory()) name += "/";
    entries.push_back(std::move(name));
  }
  if (ec) throw ToolFailure("cannot list: " + rel);
  std::sort(entries.begin(), entries.end());  // bytewise
  if (entries.empty()) return "(empty)";
  std::string out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) out += "\n";
    out += entries[i];
  }
  return out;
}

std::string Sandbox::run_shell(const json& args) {
  std::string command = require_string(args, "command");
  auto timeout = options_.shell_timeout;
  if (args.contains("timeout_s")) {
    if (!args["timeout_s"].is_number()) {
      throw ToolFailure("invalid arguments: parameter 'timeout_s' must be a number");
    }
    double requested = args["timeout_s"].get<double>();
    if (requested <= 0) throw ToolFailure("invalid arguments: timeout_s must be positive");
    // The per-call timeout may only shorten the sandbox budget.
    auto wanted = std::chrono::duration_cast<std::chrono::seconds>(
        std::chrono::duration<double>(requested));
    timeout = std::min(std::max(wanted, std::chrono::seconds(1)), options_.shell_timeout);
  }
  ProcLimits limits;
  limits.timeout = std::chrono::duration_cast<std::chrono::milliseconds>(timeout);
  limits.output_cap = options_.output_cap;
  ProcResult result = run_shell_command(command, root_, limits);
  if (result.timed_out) {
    throw ToolFailure("timeout after " + std::to_string(timeout.count()) + "s: command killed");
  }
  return "exit: " + std::to_string(result.exit_code) + "\nstdout:\n" + result.out +
         "\nstderr:\n" + result.err;
}

std::string Sandbox::cap_output(std::string text) const {
  if (text.size() <= options_.output_cap) return text;
  std::size_t dropped = text.size() - options_.output_cap;
  text.resize(options_.output_cap);
  text += "\n[truncated " + std::to_string(dropped) + " bytes]";
  return text;
}

ToolResult Sandbox::execute_tool(const ToolCall& call) {
  ToolResult result;
  result.tool_call_id = call.id;
  try {
    json args;
    try {
      args = call.arguments.empty() ? json::object() : json::parse(call.arguments);
    } catch (const json::exception& ex) {
      throw ToolFailure(std::string("invalid arguments: not a valid document: ") + ex.what());
    }
    if (!args.is_object()) throw ToolFailure("invalid arguments: expected a key-value document");

    if (call.name == "read_file") {
      result.output = run_read_file(args);
    } else if (call.name == "write_file") {
      result.output = run_write_file(args);
    } else if (call.name == "list_files") {
      result.output = run_list_files(args);
    } else if (call.name == "run_shell") {
      result.output = run_shell(args);
    } else {
      throw ToolFailure("unknown tool: " + call.name);
    }
    if (result.output.empty()) result.output = "(no output)";
  } catch (const PathEscapeError& ex) {
    result.is_error = true;
    result.output = std::string("error: ") + ex.what();
  } catch (const ToolFailure& ex) {
    result.is_error = true;
    result.output = std::string("error: ") + ex.what();
  } catch (const std::exception& ex) {
    result.is_error = true;
    result.output = std::string("error: ") + ex.what();
  }
  result.output = cap_output(std::move(result.output));
  return result;
}

}  // namespace minagent
