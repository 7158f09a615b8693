// SPDX-License-Identifier: Apache-2.0
#include "reer/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "reer/errors.hpp"
#include "reer/hashing.hpp"
#include "reer/text.hpp"

namespace reer {

ScoreContext assemble_scoring_prompt(const QuerySolutionPair& pair, const Trajectory& trajectory,
                                     const AssetStore& assets) {
  pair.validate();
  const auto& tmpl = assets.get(assets::kScoring);
  ScoreContext ctx;
  ctx.prompt = tmpl.render({{"query", pair.query}, {"trajectory", join_trajectory(trajectory)}});
  ctx.solution = pair.solution;
  ctx.boundary = text::code_point_count(ctx.prompt);
  ctx.template_version = tmpl.provenance();
  return ctx;
}

double perplexity(std::span<const double> token_logprobs) {
  if (token_logprobs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "perplexity of an empty logprob list");
  }
  double sum = 0.0;
  for (double lp : token_logprobs) {
    if (!std::isfinite(lp)) throw Error(ErrorCode::kInvalidArgument, "non-finite logprob");
    if (lp > 0.0) throw Error(ErrorCode::kInvalidArgument, "logprob above zero");
    sum += lp;
  }
  return std::exp(-sum / static_cast<double>(token_logprobs.size()));
}

// ---------------------------------------------------------------------------
// ReferenceLM

ReferenceLM ReferenceLM::train(std::string_view corpus, int order, bool reserve_unknown) {
  if (order < 1) throw Error(ErrorCode::kInvalidArgument, "n-gram order must be >= 1");
  const auto symbols = text::decode_utf8(corpus);
  if (symbols.size() < static_cast<std::size_t>(order)) {
    throw Error(ErrorCode::kCorpusTooShort, "corpus has " + std::to_string(symbols.size()) +
                                                " characters, order " + std::to_string(order) +
                                                " needs at least that many");
  }
  ReferenceLM lm;
  lm.order_ = order;
  lm.reserve_unknown_ = reserve_unknown;
  std::set<char32_t> alphabet(symbols.begin(), symbols.end());
  lm.alphabet_.assign(alphabet.begin(), alphabet.end());
  lm.add_windows(symbols);
  return lm;
}

void ReferenceLM::add_windows(const std::u32string& symbols) {
  const std::size_t n = static_cast<std::size_t>(order_);
  if (symbols.size() < n) return;
  for (std::size_t i = 0; i + n <= symbols.size(); ++i) {
    if (!reserve_unknown_) {
      bool has_unknown = false;
      for (std::size_t k = i; k < i + n; ++k) has_unknown |= symbols[k] == kUnknown;
      if (has_unknown) continue;
    }
    auto& row = rows_[symbols.substr(i, n - 1)];
    ++row.total;
    ++row.next[symbols[i + n - 1]];
  }
}

bool ReferenceLM::in_alphabet(char32_t c) const {
  return std::binary_search(alphabet_.begin(), alphabet_.end(), c);
}

char32_t ReferenceLM::map_symbol(char32_t c) const { return in_alphabet(c) ? c : kUnknown; }

std::size_t ReferenceLM::context_count(std::u32string_view context) const {
  auto it = rows_.find(std::u32string(context));
  return it == rows_.end() ? 0 : it->second.total;
}

std::size_t ReferenceLM::continuation_count(std::u32string_view context, char32_t next) const {
  auto it = rows_.find(std::u32string(context));
  if (it == rows_.end()) return 0;
  auto jt = it->second.next.find(next);
  return jt == it->second.next.end() ? 0 : jt->second;
}

double ReferenceLM::log_prob(std::u32string_view history, char32_t next) const {
  const std::size_t h = static_cast<std::size_t>(order_) - 1;
  const char32_t target = map_symbol(next);
  if (target == kUnknown && !reserve_unknown_) {
    throw Error(ErrorCode::kUnknownSymbol,
                "character U+" + std::to_string(static_cast<unsigned long>(next)) +
                    " is outside the model alphabet");
  }
  std::size_t total = 0;
  std::size_t count = 0;
  if (history.size() >= h) {
    std::u32string ctx(history.substr(history.size() - h));
    for (auto& c : ctx) c = map_symbol(c);
    if (auto it = rows_.find(ctx); it != rows_.end()) {
      total = it->second.total;
      if (auto jt = it->second.next.find(target); jt != it->second.next.end()) count = jt->second;
    }
  }
  return std::log(static_cast<double>(count + 1) /
                  static_cast<double>(total + vocabulary_size()));
}

ReferenceLM ReferenceLM::with_additional_text(std::string_view text) const {
  ReferenceLM copy = *this;
  auto symbols = text::decode_utf8(text);
  for (auto& c : symbols) c = map_symbol(c);
  copy.add_windows(symbols);
  return copy;
}

std::string ReferenceLM::id() const {
  std::string a = text::encode_utf8(alphabet_);
  return "charlm-o" + std::to_string(order_) + "-v" + std::to_string(vocabulary_size()) +
         (reserve_unknown_ ? "u" : "") + "-" + sha256_hex(a).substr(0, 8);
}

ScoreResult score_with_reference(const ReferenceLM& lm, const ScoreContext& context) {
  if (context.solution.empty()) throw Error(ErrorCode::kEmptySolution, "solution is empty");
  const auto full = text::decode_utf8(context.full_text());
  const std::size_t h = static_cast<std::size_t>(lm.order()) - 1;
  ScoreResult r;
  r.token_logprobs.reserve(full.size() - context.boundary);
  for (std::size_t p = context.boundary; p < full.size(); ++p) {
    const std::size_t from = p >= h ? p - h : 0;
    r.token_logprobs.push_back(
        lm.log_prob(std::u32string_view(full).substr(from, p - from), full[p]));
  }
  r.token_count = r.token_logprobs.size();
  r.ppl = perplexity(r.token_logprobs);
  r.template_version = context.template_version;
  return r;
}

ScoreResult score_in_context(const ReferenceLM& lm, const ScoreContext& context) {
  if (context.solution.empty()) throw Error(ErrorCode::kEmptySolution, "solution is empty");
  auto full = text::decode_utf8(context.full_text());
  for (auto& c : full) c = lm.map_symbol(c);
  const std::size_t n = static_cast<std::size_t>(lm.order());
  const std::size_t h = n - 1;
  const std::size_t boundary = context.boundary;

  struct Delta {
    std::size_t total = 0;
    std::unordered_map<char32_t, std::size_t> next;
  };
  std::unordered_map<std::u32string, Delta> deltas;
  for (std::size_t p = std::max(boundary, h); p < full.size(); ++p) {
    deltas.try_emplace(full.substr(p - h, h));
  }
  // Windows lying entirely inside the prompt.
  const bool reserve = lm.reserves_unknown();
  std::u32string key;
  for (std::size_t i = 0; i + n <= boundary; ++i) {
    if (!reserve) {
      bool has_unknown = false;
      for (std::size_t k = i; k < i + n; ++k) has_unknown |= full[k] == ReferenceLM::kUnknown;
      if (has_unknown) continue;
    }
    key.assign(full, i, h);
    auto it = deltas.find(key);
    if (it == deltas.end()) continue;
    ++it->second.total;
    ++it->second.next[full[i + h]];
  }

  ScoreResult r;
  const double vocab = static_cast<double>(lm.vocabulary_size());
  for (std::size_t p = boundary; p < full.size(); ++p) {
    const char32_t target = full[p];
    if (target == ReferenceLM::kUnknown && !reserve) {
      throw Error(ErrorCode::kUnknownSymbol, "solution character outside the model alphabet");
    }
    std::size_t total = 0;
    std::size_t count = 0;
    if (p >= h) {
      const std::u32string_view ctx = std::u32string_view(full).substr(p - h, h);
      total = lm.context_count(ctx);
      count = lm.continuation_count(ctx, target);
      const auto& d = deltas.at(std::u32string(ctx));
      total += d.total;
      if (auto jt = d.next.find(target); jt != d.next.end()) count += jt->second;
    }
    r.token_logprobs.push_back(
        std::log(static_cast<double>(count + 1) / (static_cast<double>(total) + vocab)));
  }
  r.token_count = r.token_logprobs.size();
  r.ppl = perplexity(r.token_logprobs);
  r.template_version = context.template_version;
  return r;
}

// ---------------------------------------------------------------------------
// Scorers

ReferenceScorer::ReferenceScorer(ReferenceLM lm, bool in_context)
    : lm_(std::move(lm)), in_context_(in_context) {}

ScoreResult ReferenceScorer::score(const ScoreContext& context) {
  auto r = in_context_ ? score_in_context(lm_, context) : score_with_reference(lm_, context);
  r.scorer_id = id();
  return r;
}

std::string ReferenceScorer::id() const {
  return "reference:" + lm_.id() + (in_context_ ? ":in-context" : ":static");
}

RemoteScorer::RemoteScorer(std::shared_ptr<Backend> backend, std::string model)
    : backend_(std::move(backend)), model_(std::move(model)) {}

ScoreResult RemoteScorer::score(const ScoreContext& context) {
  if (context.solution.empty()) throw Error(ErrorCode::kEmptySolution, "solution is empty");
  auto reply = complete_with_logprobs(*backend_, CompletionRequest::scoring(model_, context.full_text()));
  ScoreResult r;
  r.token_logprobs = slice_logprobs_from(reply, context.boundary);
  r.token_count = r.token_logprobs.size();
  r.ppl = perplexity(r.token_logprobs);
  r.scorer_id = id();
  r.template_version = context.template_version;
  return r;
}

std::string RemoteScorer::id() const { return "remote:" + backend_->id() + ":" + model_; }

}  // namespace reer
