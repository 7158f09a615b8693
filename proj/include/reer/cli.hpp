// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include <json.hpp>

#include "reer/backends.hpp"
#include "reer/config.hpp"
#include "reer/dataset.hpp"
#include "reer/scoring.hpp"
#include "reer/templates.hpp"

namespace reer::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitFatal = 2;

struct CommandReport {
  int exit_code = kExitOk;
  nlohmann::json summary = nlohmann::json::object();
};

/// Packaged templates, or the configured override directory.
AssetStore load_assets(const RunConfig& config);

/// Packaged templates plus one run of printable ASCII, so every plain-text
/// character is in the reference model's alphabet.
std::string default_reference_corpus(const AssetStore& assets);

std::shared_ptr<Backend> make_generator(const RunConfig& config);
std::shared_ptr<Scorer> make_scorer(const RunConfig& config, const AssetStore& assets);

/// Runs the search over every input pair and writes one SynthesisRecord per
/// line in input order. Records are flushed as they complete, so a stop
/// request leaves every finished record on disk.
CommandReport cmd_synthesize(const RunConfig& config, std::ostream& log,
                             const std::atomic<bool>* stop = nullptr);
CommandReport cmd_synthesize(const RunConfig& config, std::shared_ptr<Backend> generator,
                             std::shared_ptr<Scorer> scorer, std::ostream& log,
                             const std::atomic<bool>* stop = nullptr);

/// Attaches filter verdicts to each synthesis record.
CommandReport cmd_filter(const RunConfig& config, std::ostream& log);

/// Turns filtered records into training records, excluding and counting any
/// that failed a filter, and optionally mixes in external records.
CommandReport cmd_assemble(const RunConfig& config, std::ostream& log);

/// Writes the statistics report (JSON and CSV) for the training records that
/// carry provenance, plus rating prompts when configured.
CommandReport cmd_stats(const RunConfig& config, std::ostream& log);

/// Rescores the initial and final trajectory of each synthesis record with
/// the configured scorer.
CommandReport cmd_score(const RunConfig& config, std::ostream& log);

struct DemoOptions {
  std::filesystem::path pairs;  // empty: the shipped fixture corpus
  std::filesystem::path output_dir = "reer-demo";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct DemoReport {
  int exit_code = kExitOk;
  RunConfig config;
  StatsReport stats;
  std::size_t pairs = 0;
  std::size_t synthesized = 0;
  std::size_t degraded = 0;
  std::size_t assembled = 0;
  std::size_t excluded = 0;
  std::size_t generator_calls = 0;
  std::size_t network_calls = 0;
  double seconds = 0.0;
};

/// Location of the shipped fixture corpus.
std::filesystem::path default_fixture_pairs();

/// The offline configuration the demo runs with.
RunConfig demo_config(const DemoOptions& options);

/// Offline pipeline: fixtures -> synthesize -> filter -> assemble -> stats,
/// with the procedural generator and the in-context reference scorer. Fails
/// if any request reaches the network.
DemoReport cmd_demo(const DemoOptions& options, std::ostream& log);

}  // namespace reer::cli
