// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reer/backends.hpp"
#include "reer/core.hpp"
#include "reer/templates.hpp"

namespace reer {

struct GenerationConfig {
  std::string model = "generator";
  int max_new_tokens = 4096;
  nlohmann::json sampling = nlohmann::json::object();
  Endpoint endpoint = Endpoint::kCompletion;
  /// Candidates sharing a word span longer than this with the solution are
  /// discarded.
  std::size_t no_copy_span = 4;

  nlohmann::json to_json() const;
  static GenerationConfig from_json(const nlohmann::json& j);
};

/// Context for refining one segment: the already-refined prefix, the target,
/// and the not-yet-refined suffix.
struct RefinementContext {
  QuerySolutionPair pair;
  std::vector<Segment> prefix;
  Segment target;
  std::vector<Segment> suffix;
  std::size_t iteration = 0;

  static RefinementContext around(const QuerySolutionPair& pair, const Trajectory& trajectory,
                                  std::size_t index, std::size_t iteration);
};

enum class CandidateOrigin { kGenerated, kOriginal };

std::string_view to_string(CandidateOrigin origin);

struct Candidate {
  std::string text;
  std::optional<double> score;
  CandidateOrigin origin = CandidateOrigin::kGenerated;
};

struct CandidateSet {
  /// Generated candidates first, in generation order, then the original.
  std::vector<Candidate> candidates;
  /// One message per failed generation call.
  std::vector<std::string> errors;
  std::size_t discarded_copy = 0;
  std::size_t discarded_empty = 0;
  std::size_t discarded_duplicate = 0;
  std::size_t discarded_overflow = 0;  // beyond k

  std::size_t original_index() const;
};

std::string render_initial_prompt(const QuerySolutionPair& pair,
                                  const AssetStore& assets = AssetStore::builtin());
std::string render_edit_prompt(const RefinementContext& context,
                               const AssetStore& assets = AssetStore::builtin());

/// Bodies of every `<tag>...</tag>` block, in order. Unterminated blocks are
/// ignored.
std::vector<std::string> extract_tagged(std::string_view text, std::string_view tag);

/// Removes one surrounding <think>...</think> wrapper if present. Text before
/// an opening tag or after the closing tag is dropped.
std::string strip_think_wrapper(std::string_view text);

/// True when `candidate` and `reference` share a contiguous run of more than
/// `max_span` content words (lowercased, punctuation-trimmed).
bool shares_verbatim_span(std::string_view candidate, std::string_view reference,
                          std::size_t max_span);

/// Generates z0 from the initial-thinking prompt. Throws kGeneratorFailure if
/// the backend fails and kEmptyOutput if nothing remains after stripping.
Trajectory init_trajectory(const QuerySolutionPair& pair, Backend& generator,
                           const GenerationConfig& config, std::uint64_t seed,
                           const AssetStore& assets = AssetStore::builtin());

/// Issues `k` generation calls for the segment-edit prompt (distinct sampling
/// seeds) and collects every <refine> body. Empty, duplicate and copying
/// candidates are dropped; at most `k` survive. The original segment is
/// always appended last. Failed calls are recorded in `errors`.
CandidateSet expand_segment(const RefinementContext& context, std::size_t k, Backend& generator,
                            const GenerationConfig& config, std::uint64_t seed,
                            const AssetStore& assets = AssetStore::builtin());

/// Occurrences of each pattern (case-insensitive, word boundaries).
std::map<std::string, std::size_t> inject_thinking_patterns_check(
    std::string_view text, const std::vector<std::string>& patterns);

}  // namespace reer
