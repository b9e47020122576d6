// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace minagent {

enum class EventKind { RunStart, Request, Response, ToolExec, RunEnd };

std::string_view event_kind_name(EventKind kind);
EventKind parse_event_kind(std::string_view name);

inline constexpr std::string_view kRedactedApiKey = "<redacted>";

struct TrajectoryEvent {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::RunStart;
  std::string ts;  // RFC 3339 UTC
  nlohmann::json payload;
};

class TrajectoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class SequenceGapError : public TrajectoryError {
 public:
  using TrajectoryError::TrajectoryError;
};
class SinkClosedError : public TrajectoryError {
 public:
  using TrajectoryError::TrajectoryError;
};
class MalformedStreamError : public TrajectoryError {
 public:
  MalformedStreamError(std::size_t position, const std::string& why)
      : TrajectoryError("malformed trajectory at line " + std::to_string(position) + ": " + why),
        position(position) {}
  std::size_t position;
};

/// Append-only JSONL writer, one event per line, flushed on every append.
/// The first event must be run_start; run_end closes the sink.
class TrajectorySink {
 public:
  explicit TrajectorySink(const std::filesystem::path& file);

  void append(const TrajectoryEvent& event);  // throws SequenceGapError / SinkClosedError
  /// Convenience: assigns the next seq and the current UTC timestamp.
  void append_now(EventKind kind, nlohmann::json payload);

  std::uint64_t next_seq() const { return next_seq_; }
  bool closed() const { return closed_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t next_seq_ = 0;
  bool closed_ = false;
};

std::string rfc3339_utc_now();

std::vector<TrajectoryEvent> read_trajectory(const std::filesystem::path& file);

struct TrajectoryVerdict {
  bool equivalent = true;
  std::uint64_t first_divergent_seq = 0;
  std::string detail;
};

/// Equivalent iff the streams match on (kind, payload) pairwise; timestamps
/// are ignored (api keys never appear in payloads in the first place).
TrajectoryVerdict compare_trajectories(std::span<const TrajectoryEvent> a,
                                       std::span<const TrajectoryEvent> b);

/// SHA-256 of the canonical event stream with timestamps zeroed.
std::string trajectory_digest(std::span<const TrajectoryEvent> events);

struct ProvenanceRecord {
  std::string hash = "sha256";
  std::string spec_digest;
  std::string model;
  std::string base_url;
  std::string tool_catalog_digest;
  std::string trajectory_digest;
  std::map<std::string, std::string> artifact_digests;  // produced path -> digest

  nlohmann::json to_json() const;
  static ProvenanceRecord from_json(const nlohmann::json& payload);
};

void write_provenance(const std::filesystem::path& file, const ProvenanceRecord& record);
ProvenanceRecord read_provenance(const std::filesystem::path& file);

}  // namespace minagent
