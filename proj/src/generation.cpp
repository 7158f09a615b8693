// SPDX-License-Identifier: Apache-2.0
#include "reer/generation.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "reer/errors.hpp"
#include "reer/hashing.hpp"
#include "reer/text.hpp"

namespace reer {

using nlohmann::json;

namespace {

std::string join_segments(const std::vector<Segment>& segments) {
  std::string out;
  for (const auto& s : segments) {
    if (!out.empty()) out += "\n\n";
    out += s.text;
  }
  return out;
}

json with_seed(const json& sampling, std::uint64_t seed) {
  json s = sampling.is_object() ? sampling : json::object();
  // Servers commonly reject seeds outside the signed 32-bit range.
  s["seed"] = static_cast<std::int64_t>(seed & 0x7fffffffULL);
  return s;
}

}  // namespace

json GenerationConfig::to_json() const {
  return json{{"model", model},
              {"max_new_tokens", max_new_tokens},
              {"sampling", sampling},
              {"endpoint", endpoint == Endpoint::kChat ? "chat" : "completion"},
              {"no_copy_span", no_copy_span}};
}

GenerationConfig GenerationConfig::from_json(const json& j) {
  GenerationConfig c;
  c.model = j.value("model", c.model);
  c.max_new_tokens = j.value("max_new_tokens", c.max_new_tokens);
  if (j.contains("sampling")) c.sampling = j.at("sampling");
  const auto ep = j.value("endpoint", std::string("completion"));
  if (ep == "chat") {
    c.endpoint = Endpoint::kChat;
  } else if (ep == "completion") {
    c.endpoint = Endpoint::kCompletion;
  } else {
    throw Error(ErrorCode::kConfig, "generation.endpoint must be 'completion' or 'chat'");
  }
  c.no_copy_span = j.value("no_copy_span", c.no_copy_span);
  if (c.max_new_tokens <= 0) throw Error(ErrorCode::kConfig, "generation.max_new_tokens must be > 0");
  if (c.no_copy_span == 0) throw Error(ErrorCode::kConfig, "generation.no_copy_span must be > 0");
  return c;
}

RefinementContext RefinementContext::around(const QuerySolutionPair& pair,
                                            const Trajectory& trajectory, std::size_t index,
                                            std::size_t iteration) {
  const auto& target = trajectory.at(index);
  RefinementContext ctx;
  ctx.pair = pair;
  const auto& segs = trajectory.segments();
  ctx.prefix.assign(segs.begin(), segs.begin() + static_cast<std::ptrdiff_t>(index));
  ctx.target = target;
  ctx.suffix.assign(segs.begin() + static_cast<std::ptrdiff_t>(index) + 1, segs.end());
  ctx.iteration = iteration;
  return ctx;
}

std::string_view to_string(CandidateOrigin origin) {
  return origin == CandidateOrigin::kOriginal ? "original" : "generated";
}

std::size_t CandidateSet::original_index() const {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].origin == CandidateOrigin::kOriginal) return i;
  }
  throw Error(ErrorCode::kInvalidArgument, "candidate set has no original segment");
}

std::string render_initial_prompt(const QuerySolutionPair& pair, const AssetStore& assets) {
  return assets.get(assets::kInitialThinking)
      .render({{"query", pair.query}, {"solution", pair.solution}});
}

std::string render_edit_prompt(const RefinementContext& context, const AssetStore& assets) {
  return assets.get(assets::kSegmentEdit)
      .render({{"query", context.pair.query},
               {"solution", context.pair.solution},
               {"prefix", join_segments(context.prefix)},
               {"target", context.target.text},
               {"suffix", join_segments(context.suffix)}});
}

std::vector<std::string> extract_tagged(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto b = text.find(open, pos);
    if (b == std::string_view::npos) break;
    b += open.size();
    auto e = text.find(close, b);
    if (e == std::string_view::npos) break;
    out.emplace_back(text.substr(b, e - b));
    pos = e + close.size();
  }
  return out;
}

std::string strip_think_wrapper(std::string_view text) {
  constexpr std::string_view kOpen = "<think>";
  constexpr std::string_view kClose = "</think>";
  std::string_view body = text;
  if (auto b = body.find(kOpen); b != std::string_view::npos) body = body.substr(b + kOpen.size());
  if (auto e = body.find(kClose); e != std::string_view::npos) body = body.substr(0, e);
  return std::string(text::trim(body));
}

bool shares_verbatim_span(std::string_view candidate, std::string_view reference,
                          std::size_t max_span) {
  const std::size_t w = max_span + 1;
  const auto cand = text::content_words(candidate);
  const auto ref = text::content_words(reference);
  if (cand.size() < w || ref.size() < w) return false;
  auto key = [w](const std::vector<std::string>& words, std::size_t i) {
    std::string k;
    for (std::size_t j = i; j < i + w; ++j) {
      k += words[j];
      k += '\x1f';
    }
    return k;
  };
  std::unordered_set<std::string> grams;
  for (std::size_t i = 0; i + w <= ref.size(); ++i) grams.insert(key(ref, i));
  for (std::size_t i = 0; i + w <= cand.size(); ++i) {
    if (grams.count(key(cand, i))) return true;
  }
  return false;
}

Trajectory init_trajectory(const QuerySolutionPair& pair, Backend& generator,
                           const GenerationConfig& config, std::uint64_t seed,
                           const AssetStore& assets) {
  pair.validate();
  auto request = CompletionRequest::generation(config.model, render_initial_prompt(pair, assets),
                                               config.max_new_tokens,
                                               with_seed(config.sampling, seed), config.endpoint);
  BackendReply reply;
  try {
    reply = generate_text(generator, request);
  } catch (const Error& e) {
    throw Error(ErrorCode::kGeneratorFailure,
                "initial trajectory for '" + pair.id + "': " + e.what());
  }
  const auto body = strip_think_wrapper(*reply.text);
  if (body.empty()) {
    throw Error(ErrorCode::kEmptyOutput, "generator returned no thinking for '" + pair.id + "'");
  }
  return segment_trajectory(body);
}

CandidateSet expand_segment(const RefinementContext& context, std::size_t k, Backend& generator,
                            const GenerationConfig& config, std::uint64_t seed,
                            const AssetStore& assets) {
  CandidateSet set;
  if (k > 0) {
    const auto prompt = render_edit_prompt(context, assets);
    std::set<std::string> seen;
    for (std::size_t j = 0; j < k; ++j) {
      auto request = CompletionRequest::generation(config.model, prompt, config.max_new_tokens,
                                                   with_seed(config.sampling, mix_seed(seed, j)),
                                                   config.endpoint);
      BackendReply reply;
      try {
        reply = generate_text(generator, request);
      } catch (const Error& e) {
        set.errors.push_back("candidate " + std::to_string(j) + ": " + e.what());
        continue;
      }
      const auto bodies = extract_tagged(*reply.text, "refine");
      if (bodies.empty()) ++set.discarded_empty;
      for (const auto& body : bodies) {
        auto textv = to_single_paragraph(text::trim(body));
        if (textv.empty()) {
          ++set.discarded_empty;
          continue;
        }
        if (shares_verbatim_span(textv, context.pair.solution, config.no_copy_span)) {
          ++set.discarded_copy;
          continue;
        }
        if (textv == context.target.text || !seen.insert(textv).second) {
          ++set.discarded_duplicate;
          continue;
        }
        if (set.candidates.size() >= k) {
          ++set.discarded_overflow;
          continue;
        }
        set.candidates.push_back(Candidate{std::move(textv), std::nullopt, CandidateOrigin::kGenerated});
      }
    }
  }
  set.candidates.push_back(Candidate{context.target.text, std::nullopt, CandidateOrigin::kOriginal});
  return set;
}

std::map<std::string, std::size_t> inject_thinking_patterns_check(
    std::string_view text, const std::vector<std::string>& patterns) {
  if (patterns.empty()) throw Error(ErrorCode::kInvalidArgument, "pattern list is empty");
  text::PatternSet set(patterns);
  const auto counts = set.count(text);
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < patterns.size(); ++i) out[patterns[i]] += counts[i];
  return out;
}

}  // namespace reer
