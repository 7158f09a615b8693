// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reer/backends.hpp"
#include "reer/core.hpp"
#include "reer/filters.hpp"
#include "reer/generation.hpp"
#include "reer/scoring.hpp"
#include "reer/templates.hpp"

namespace reer {

struct SearchConfig {
  /// Total expansion steps across all passes.
  std::size_t max_iterations = 64;
  /// Stop as soon as the perplexity is at or below this value.
  std::optional<double> ppl_threshold;
  std::size_t candidates_per_expansion = 4;
  /// Full left-to-right sweeps over the segments.
  std::size_t passes = 2;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SearchConfig from_json(const nlohmann::json& j);
};

struct StepLogEntry {
  std::size_t pass = 0;
  std::size_t segment = 0;
  CandidateOrigin chosen_origin = CandidateOrigin::kOriginal;
  std::size_t chosen_ordinal = 0;
  std::size_t candidates_scored = 0;
  double ppl_before = 0.0;
  double ppl_after = 0.0;

  bool operator==(const StepLogEntry&) const = default;
};

struct SearchState {
  Trajectory trajectory;
  double ppl = 0.0;
  std::vector<StepLogEntry> step_log;
  std::size_t iterations = 0;
};

enum class StopReason { kThreshold, kBudget, kPassesExhausted, kDegraded };

std::string_view to_string(StopReason reason);
StopReason stop_reason_from_string(std::string_view name);

struct SynthesisRecord {
  static constexpr int kSchemaVersion = 1;

  std::string pair_id;
  std::string category;
  Trajectory initial_trajectory{std::vector<std::string>{"-"}};
  Trajectory final_trajectory{std::vector<std::string>{"-"}};
  double initial_ppl = 0.0;
  double final_ppl = 0.0;
  std::size_t iterations = 0;
  std::size_t passes_completed = 0;
  StopReason stop_reason = StopReason::kPassesExhausted;
  std::vector<StepLogEntry> step_log;
  std::string scorer_id;
  std::string generator_id;
  std::map<std::string, std::string> template_versions;
  bool degraded = false;
  std::string error;
  std::vector<FilterVerdict> filter_verdicts;

  nlohmann::json to_json() const;
  static SynthesisRecord from_json(const nlohmann::json& j);
  /// One JSONL line (no trailing newline).
  std::string to_jsonl() const;
};

/// Per-step progress event.
struct ProgressEvent {
  std::string pair_id;
  std::size_t pass = 0;
  std::size_t segment = 0;
  double ppl_before = 0.0;
  double ppl_after = 0.0;
};

using ProgressSink = std::function<void(const ProgressEvent&)>;

/// Scores every candidate spliced into segment `index` and keeps the strict
/// argmin. The original candidate carries the incumbent perplexity and wins
/// ties, then the lowest ordinal wins. Scores are written back into
/// `candidates`. A scorer failure throws kScorerFailure with the state left
/// untouched; the scores computed so far remain in `candidates`.
SearchState evaluate_and_select(const SearchState& state, std::size_t index,
                                CandidateSet& candidates, const QuerySolutionPair& pair,
                                Scorer& scorer, std::size_t pass = 0,
                                const AssetStore& assets = AssetStore::builtin());

struct SearchEnvironment {
  Backend& generator;
  Scorer& scorer;
  GenerationConfig generation;
  const AssetStore& assets = AssetStore::builtin();
  ProgressSink progress;
};

/// Full local search for one pair. Initialization failures propagate; any
/// later backend failure ends the search with the best state so far and
/// marks the record degraded.
SynthesisRecord run_search(const QuerySolutionPair& pair, const SearchConfig& config,
                           const SearchEnvironment& env);

struct BatchOutcome {
  std::size_t completed = 0;
  std::size_t degraded = 0;
  std::size_t failed = 0;
  std::vector<std::string> failures;  // "pair_id: message"
};

/// Runs independent pairs on `workers` threads. `sink` receives records in
/// input order from a single thread at a time. Setting `stop` makes workers
/// finish their current pair and take no more.
BatchOutcome run_batch(const std::vector<QuerySolutionPair>& pairs, const SearchConfig& config,
                       const SearchEnvironment& env, std::size_t workers,
                       const std::function<void(const SynthesisRecord&)>& sink,
                       const std::atomic<bool>* stop = nullptr);

}  // namespace reer
