// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace minagent {

/// Lowercase hex SHA-256 of an in-memory byte string.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents, streamed. Throws std::runtime_error if the
/// file cannot be opened.
std::string sha256_file(const std::filesystem::path& path);

/// Canonical JSON normal form: parsed and re-serialized with sorted object
/// keys and no insignificant whitespace. Throws on malformed input.
std::string canonical_json(std::string_view json_text);

}  // namespace minagent
