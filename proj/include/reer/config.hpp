// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reer/backends.hpp"
#include "reer/filters.hpp"
#include "reer/generation.hpp"
#include "reer/search.hpp"

namespace reer {

/// Input and output locations. Relative paths resolve against the working
/// directory. Empty optional paths disable the corresponding step.
struct PathsConfig {
  std::string pairs = "pairs.jsonl";
  std::string synthesis = "out/synthesis.jsonl";
  std::string filtered = "out/filtered.jsonl";
  std::string training = "out/training.jsonl";
  std::string stats_json = "out/stats.json";
  std::string stats_csv = "out/stats.csv";
  std::string scores = "out/scores.jsonl";
  std::string external;       // external training records to mix in
  std::string mixed;          // mixed dataset output
  std::string judge_prompts;  // rating prompts for the assembled records
  std::string assets_dir;     // overrides the packaged templates
  std::string cache_dir;      // reply cache for remote backends
};

struct RemoteConfig {
  HttpConfig http;
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
};

struct GeneratorConfig {
  std::string kind = "scripted";  // or "remote"
  RemoteConfig remote;
};

struct ReferenceLMConfig {
  int order = 4;
  /// Training text for the character model; empty uses the packaged
  /// templates plus printable ASCII.
  std::string corpus;
  bool in_context = true;
  bool reserve_unknown = true;
};

struct ScorerConfig {
  std::string kind = "reference_lm";  // or "remote"
  ReferenceLMConfig reference;
  std::string model = "scorer";
  RemoteConfig remote;
};

struct MixConfig {
  std::optional<std::size_t> synthetic_count;
  std::optional<std::size_t> external_count;
  double synthetic_weight = 1.0;
  double external_weight = 1.0;
  bool strict = true;
};

enum class Command { kSynthesize, kFilter, kAssemble, kStats, kScore };

struct RunConfig {
  static constexpr int kSchemaVersion = 1;

  PathsConfig paths;
  SearchConfig search;
  FilterConfig filters;
  GenerationConfig generation;
  GeneratorConfig generator;
  ScorerConfig scorer;
  MixConfig mix;
  std::size_t workers = 1;
  bool strict_ingest = true;

  nlohmann::json to_json() const;
  /// Unknown keys and type errors are collected and reported together as
  /// one kConfig error.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);

  /// Every problem that would stop `command`, in a stable order: settings,
  /// template assets, input files, output collisions.
  std::vector<std::string> problems(Command command) const;
  /// Throws kConfig listing all problems.
  void validate(Command command) const;
};

}  // namespace reer
