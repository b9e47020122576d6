// SPDX-License-Identifier: Apache-2.0
#include "minagent/trajectory.hpp"

#include <sys/time.h>

#include <cstdio>
#include <ctime>

#include "minagent/digest.hpp"

namespace minagent {
namespace {

using nlohmann::json;

json event_to_json(const TrajectoryEvent& event) {
  return {{"seq", event.seq},
          {"kind", event_kind_name(event.kind)},
          {"ts", event.ts},
          {"payload", event.payload}};
}

}  // namespace

std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::RunStart: return "run_start";
    case EventKind::Request: return "request";
    case EventKind::Response: return "response";
    case EventKind::ToolExec: return "tool_exec";
    case EventKind::RunEnd: return "run_end";
  }
  return "unknown";
}

EventKind parse_event_kind(std::string_view name) {
  if (name == "run_start") return EventKind::RunStart;
  if (name == "request") return EventKind::Request;
  if (name == "response") return EventKind::Response;
  if (name == "tool_exec") return EventKind::ToolExec;
  if (name == "run_end") return EventKind::RunEnd;
  throw TrajectoryError("unknown event kind: " + std::string(name));
}

std::string rfc3339_utc_now() {
  struct timeval tv;
  gettimeofday(&tv, nullptr);
  struct tm parts;
  gmtime_r(&tv.tv_sec, &parts);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", parts.tm_year + 1900,
                parts.tm_mon + 1, parts.tm_mday, parts.tm_hour, parts.tm_min, parts.tm_sec,
                static_cast<int>(tv.tv_usec / 1000));
  return buf;
}

TrajectorySink::TrajectorySink(const std::filesystem::path& file) : path_(file) {
  out_.open(file, std::ios::binary | std::ios::trunc);
  if (!out_.is_open()) {
    throw TrajectoryError("cannot open trajectory sink: " + file.string());
  }
}

void TrajectorySink::append(const TrajectoryEvent& event) {
  if (closed_) throw SinkClosedError("append after run_end");
  if (event.seq != next_seq_) {
    throw SequenceGapError("expected seq " + std::to_string(next_seq_) + ", got " +
                           std::to_string(event.seq));
  }
  if (next_seq_ == 0 && event.kind != EventKind::RunStart) {
    throw TrajectoryError("first event must be run_start");
  }
  out_ << event_to_json(event).dump() << "\n";
  out_.flush();
  if (!out_.good()) throw TrajectoryError("trajectory write failed: " + path_.string());
  ++next_seq_;
  if (event.kind == EventKind::RunEnd) closed_ = true;
}

void TrajectorySink::append_now(EventKind kind, nlohmann::json payload) {
  append({next_seq_, kind, rfc3339_utc_now(), std::move(payload)});
}

std::vector<TrajectoryEvent> read_trajectory(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in.is_open()) throw TrajectoryError("cannot open trajectory: " + file.string());
  std::vector<TrajectoryEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json parsed;
    try {
      parsed = json::parse(line);
    } catch (const json::exception& ex) {
      throw MalformedStreamError(line_no, ex.what());
    }
    if (!parsed.is_object() || !parsed.contains("seq") || !parsed.contains("kind") ||
        !parsed.contains("payload")) {
      throw MalformedStreamError(line_no, "event needs seq, kind and payload");
    }
    TrajectoryEvent event;
    try {
      event.seq = parsed["seq"].get<std::uint64_t>();
      event.kind = parse_event_kind(parsed["kind"].get<std::string>());
    } catch (const std::exception& ex) {
      throw MalformedStreamError(line_no, ex.what());
    }
    event.ts = parsed.value("ts", "");
    event.payload = parsed["payload"];
    events.push_back(std::move(event));
  }
  return events;
}

TrajectoryVerdict compare_trajectories(std::span<const TrajectoryEvent> a,
                                       std::span<const TrajectoryEvent> b) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].kind != b[i].kind) {
      return {false, a[i].seq,
              "kind differs: " + std::string(event_kind_name(a[i].kind)) + " vs " +
                  std::string(event_kind_name(b[i].kind))};
    }
    if (a[i].payload != b[i].payload) {
      return {false, a[i].seq, "payload differs"};
    }
  }
  if (a.size() != b.size()) {
    std::uint64_t seq = n < a.size() ? a[n].seq : b[n].seq;
    return {false, seq, "stream lengths differ"};
  }
  return {};
}

std::string trajectory_digest(std::span<const TrajectoryEvent> events) {
  std::string stream;
  for (const auto& event : events) {
    TrajectoryEvent zeroed = event;
    zeroed.ts = "1970-01-01T00:00:00.000Z";
    stream += event_to_json(zeroed).dump();
    stream += "\n";
  }
  return sha256_hex(stream);
}

json ProvenanceRecord::to_json() const {
  json artifacts = json::object();
  for (const auto& [path, digest] : artifact_digests) artifacts[path] = digest;
  return {{"hash", hash},
          {"spec_digest", spec_digest},
          {"model", model},
          {"base_url", base_url},
          {"tool_catalog_digest", tool_catalog_digest},
          {"trajectory_digest", trajectory_digest},
          {"artifact_digests", artifacts}};
}

ProvenanceRecord ProvenanceRecord::from_json(const json& payload) {
  ProvenanceRecord record;
  record.hash = payload.value("hash", "");
  record.spec_digest = payload.value("spec_digest", "");
  record.model = payload.value("model", "");
  record.base_url = payload.value("base_url", "");
  record.tool_catalog_digest = payload.value("tool_catalog_digest", "");
  record.trajectory_digest = payload.value("trajectory_digest", "");
  if (payload.contains("artifact_digests")) {
    for (const auto& [path, digest] : payload["artifact_digests"].items()) {
      record.artifact_digests[path] = digest.get<std::string>();
    }
  }
  return record;
}

void write_provenance(const std::filesystem::path& file, const ProvenanceRecord& record) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out.is_open()) throw TrajectoryError("cannot write provenance: " + file.string());
  out << record.to_json().dump(2) << "\n";
  out.flush();
  if (!out.good()) throw TrajectoryError("provenance write failed: " + file.string());
}

ProvenanceRecord read_provenance(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in.is_open()) throw TrajectoryError("cannot read provenance: " + file.string());
  json payload = json::parse(in, nullptr, true);
  return ProvenanceRecord::from_json(payload);
}

}  // namespace minagent
