// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "minagent/conformance.hpp"
#include "minagent/trajectory.hpp"

namespace minagent {

/// Drive a generator agent to produce a fresh implementation from a
/// specification document inside an empty working directory.
struct GenerationJob {
  std::filesystem::path spec_path;
  AgentUnderTest generator;
  std::filesystem::path workdir;  // created if missing; must be empty
  std::string prompt = "implement the spec in a single python file";
  std::string pinned_model;
  std::string base_url;  // endpoint the generator talks to
  std::string api_key;
  int max_turns = 40;
  std::chrono::seconds timeout{600};
};

struct AgentArtifact {
  std::filesystem::path entry_path;
  std::string launch_template;  // derived command for the produced program
  ProvenanceRecord provenance;
};

class BootstrapError : public std::runtime_error {
 public:
  enum class Kind { GeneratorFailed, NoArtifactProduced, AmbiguousArtifact };

  BootstrapError(Kind kind, std::string message, std::vector<std::string> candidates = {})
      : std::runtime_error(std::move(message)), kind(kind), candidates(std::move(candidates)) {}

  Kind kind;
  std::vector<std::string> candidates;
};

/// Copy the spec into the workdir, run the generator with the job prompt,
/// locate the single produced entry file at the workdir root (the copied
/// spec and hidden entries do not count), and assemble the provenance
/// record over every file left in the workdir.
AgentArtifact generate_implementation(const GenerationJob& job);

struct FixedPointVerdict {
  bool holds = false;
  ConformanceReport report_a;
  ConformanceReport report_b;
  DivergenceReport divergence;

  nlohmann::json to_json() const;
};

/// Holds iff both agents pass the whole suite and their divergence report is
/// empty: equivalence under the specification, not byte equality.
FixedPointVerdict verify_fixed_point(const AgentUnderTest& a0, const AgentUnderTest& a1,
                                     const std::vector<ConformanceCheck>& checks);

}  // namespace minagent
