// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "reer/backends.hpp"
#include "reer/core.hpp"
#include "reer/templates.hpp"

namespace reer {

/// Rendered conditioning text plus the solution it conditions. `boundary` is
/// the code point offset in full_text() where the solution begins.
struct ScoreContext {
  std::string prompt;
  std::string solution;
  std::size_t boundary = 0;
  std::string template_version;

  std::string full_text() const { return prompt + solution; }
};

struct ScoreResult {
  std::vector<double> token_logprobs;
  double ppl = 1.0;
  std::size_t token_count = 0;
  std::string scorer_id;
  std::string template_version;
};

/// Renders the scoring template: the query, then the trajectory inside think
/// markers, then the opening answer marker. The solution follows directly.
ScoreContext assemble_scoring_prompt(const QuerySolutionPair& pair, const Trajectory& trajectory,
                                     const AssetStore& assets = AssetStore::builtin());

/// exp(-mean(logprobs)). Throws kInvalidArgument on an empty list or on a
/// non-finite or positive entry.
double perplexity(std::span<const double> token_logprobs);

/// Character n-gram model with add-one smoothing.
///
/// Counts are taken over every length-`order` window of the training corpus.
/// P(c | h) = (count(h, c) + 1) / (count(h) + V), where h is the preceding
/// order-1 characters and V the vocabulary size. The vocabulary is the set of
/// corpus characters; with `reserve_unknown` a single unknown symbol joins it,
/// and any out-of-vocabulary character is scored as that symbol. Without it,
/// scoring an out-of-vocabulary character throws kUnknownSymbol. Contexts
/// shorter than order-1 (at the very start of a text) are never observed and
/// fall back to the uniform 1/V.
class ReferenceLM {
 public:
  static constexpr char32_t kUnknown = 0x110000;

  static ReferenceLM train(std::string_view corpus, int order, bool reserve_unknown = false);

  int order() const noexcept { return order_; }
  bool reserves_unknown() const noexcept { return reserve_unknown_; }
  /// Sorted corpus characters (without the unknown symbol).
  const std::u32string& alphabet() const noexcept { return alphabet_; }
  std::size_t vocabulary_size() const noexcept {
    return alphabet_.size() + (reserve_unknown_ ? 1 : 0);
  }
  bool in_alphabet(char32_t c) const;
  /// In-alphabet characters map to themselves, all others to kUnknown.
  char32_t map_symbol(char32_t c) const;

  std::size_t context_count(std::u32string_view context) const;
  std::size_t continuation_count(std::u32string_view context, char32_t next) const;

  /// Natural-log probability of `next` after `history`; only the last
  /// order-1 characters of history are used.
  double log_prob(std::u32string_view history, char32_t next) const;

  /// Adds the windows of `text` to a copy of the counts. The vocabulary is
  /// unchanged: out-of-vocabulary characters become kUnknown, and windows
  /// containing one are skipped unless the unknown symbol is reserved.
  ReferenceLM with_additional_text(std::string_view text) const;

  std::string id() const;

 private:
  struct Row {
    std::size_t total = 0;
    std::unordered_map<char32_t, std::size_t> next;
  };

  void add_windows(const std::u32string& symbols);

  int order_ = 1;
  bool reserve_unknown_ = false;
  std::u32string alphabet_;
  std::unordered_map<std::u32string, Row> rows_;
};

/// One logprob per character of the solution, each conditioned on the
/// preceding order-1 characters of the full prompt+solution text.
ScoreResult score_with_reference(const ReferenceLM& lm, const ScoreContext& context);

/// Same as scoring with `lm.with_additional_text(context.prompt)`, without
/// copying the model: only counts for the contexts the solution needs are
/// gathered from the prompt.
ScoreResult score_in_context(const ReferenceLM& lm, const ScoreContext& context);

/// PPL(y | x, z) provider used by the search. Implementations are safe for
/// concurrent use.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual ScoreResult score(const ScoreContext& context) = 0;
  virtual std::string id() const = 0;
};

/// Scores with the built-in character model. In `in_context` mode the model
/// also counts the windows of the conditioning prompt, so a trajectory that
/// anticipates the solution's wording lowers its perplexity; in static mode
/// the trajectory only reaches the first order-1 solution characters.
class ReferenceScorer : public Scorer {
 public:
  ReferenceScorer(ReferenceLM lm, bool in_context);

  ScoreResult score(const ScoreContext& context) override;
  std::string id() const override;
  const ReferenceLM& model() const noexcept { return lm_; }

 private:
  ReferenceLM lm_;
  bool in_context_;
};

/// Scores through a logprob-echoing backend: sends prompt+solution with
/// max_new_tokens = 0 and keeps the tokens at or after the boundary.
class RemoteScorer : public Scorer {
 public:
  RemoteScorer(std::shared_ptr<Backend> backend, std::string model);

  ScoreResult score(const ScoreContext& context) override;
  std::string id() const override;

 private:
  std::shared_ptr<Backend> backend_;
  std::string model_;
};

}  // namespace reer
