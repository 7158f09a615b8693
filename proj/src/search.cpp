// SPDX-License-Identifier: Apache-2.0
#include "reer/search.hpp"

#include <algorithm>
#include <mutex>
#include <thread>

#include "reer/errors.hpp"
#include "reer/hashing.hpp"

namespace reer {

using nlohmann::json;

void SearchConfig::validate() const {
  if (ppl_threshold && !(*ppl_threshold > 0.0)) {
    throw Error(ErrorCode::kConfig, "search.ppl_threshold must be > 0 when set");
  }
  if (passes < 1) throw Error(ErrorCode::kConfig, "search.passes must be >= 1");
}

json SearchConfig::to_json() const {
  return json{{"max_iterations", max_iterations},
              {"ppl_threshold", ppl_threshold ? json(*ppl_threshold) : json(nullptr)},
              {"candidates_per_expansion", candidates_per_expansion},
              {"passes", passes},
              {"seed", seed}};
}

SearchConfig SearchConfig::from_json(const json& j) {
  SearchConfig c;
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  if (j.contains("ppl_threshold") && !j.at("ppl_threshold").is_null()) {
    c.ppl_threshold = j.at("ppl_threshold").get<double>();
  }
  c.candidates_per_expansion = j.value("candidates_per_expansion", c.candidates_per_expansion);
  c.passes = j.value("passes", c.passes);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kThreshold: return "threshold";
    case StopReason::kBudget: return "budget";
    case StopReason::kPassesExhausted: return "passes_exhausted";
    case StopReason::kDegraded: return "degraded";
  }
  return "passes_exhausted";
}

StopReason stop_reason_from_string(std::string_view name) {
  if (name == "threshold") return StopReason::kThreshold;
  if (name == "budget") return StopReason::kBudget;
  if (name == "passes_exhausted") return StopReason::kPassesExhausted;
  if (name == "degraded") return StopReason::kDegraded;
  throw Error(ErrorCode::kMalformedRecord, "unknown stop reason '" + std::string(name) + "'");
}

json SynthesisRecord::to_json() const {
  json steps = json::array();
  for (const auto& s : step_log) {
    steps.push_back(json{{"pass", s.pass},
                         {"segment", s.segment},
                         {"origin", to_string(s.chosen_origin)},
                         {"ordinal", s.chosen_ordinal},
                         {"candidates", s.candidates_scored},
                         {"ppl_before", s.ppl_before},
                         {"ppl_after", s.ppl_after}});
  }
  json verdicts = json::array();
  for (const auto& v : filter_verdicts) verdicts.push_back(v.to_json());
  return json{{"schema_version", kSchemaVersion},
              {"pair_id", pair_id},
              {"category", category},
              {"initial_trajectory", initial_trajectory.texts()},
              {"final_trajectory", final_trajectory.texts()},
              {"initial_ppl", initial_ppl},
              {"final_ppl", final_ppl},
              {"iterations", iterations},
              {"passes_completed", passes_completed},
              {"stop_reason", to_string(stop_reason)},
              {"step_log", std::move(steps)},
              {"scorer_id", scorer_id},
              {"generator_id", generator_id},
              {"template_versions", template_versions},
              {"degraded", degraded},
              {"error", error},
              {"filter_verdicts", std::move(verdicts)}};
}

SynthesisRecord SynthesisRecord::from_json(const json& j) {
  try {
    if (j.value("schema_version", 0) != kSchemaVersion) {
      throw Error(ErrorCode::kMalformedRecord, "unsupported synthesis record schema_version");
    }
    SynthesisRecord r;
    r.pair_id = j.at("pair_id").get<std::string>();
    r.category = j.value("category", std::string());
    r.initial_trajectory = Trajectory(j.at("initial_trajectory").get<std::vector<std::string>>());
    r.final_trajectory = Trajectory(j.at("final_trajectory").get<std::vector<std::string>>());
    r.initial_ppl = j.at("initial_ppl").get<double>();
    r.final_ppl = j.at("final_ppl").get<double>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.passes_completed = j.value("passes_completed", std::size_t{0});
    r.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
    for (const auto& s : j.at("step_log")) {
      StepLogEntry e;
      e.pass = s.at("pass").get<std::size_t>();
      e.segment = s.at("segment").get<std::size_t>();
      e.chosen_origin = s.at("origin").get<std::string>() == "original" ? CandidateOrigin::kOriginal
                                                                         : CandidateOrigin::kGenerated;
      e.chosen_ordinal = s.at("ordinal").get<std::size_t>();
      e.candidates_scored = s.at("candidates").get<std::size_t>();
      e.ppl_before = s.at("ppl_before").get<double>();
      e.ppl_after = s.at("ppl_after").get<double>();
      r.step_log.push_back(e);
    }
    r.scorer_id = j.value("scorer_id", std::string());
    r.generator_id = j.value("generator_id", std::string());
    r.template_versions = j.value("template_versions", std::map<std::string, std::string>{});
    r.degraded = j.value("degraded", false);
    r.error = j.value("error", std::string());
    if (j.contains("filter_verdicts")) {
      for (const auto& v : j.at("filter_verdicts")) r.filter_verdicts.push_back(FilterVerdict::from_json(v));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("synthesis record: ") + e.what());
  }
}

std::string SynthesisRecord::to_jsonl() const { return to_json().dump(); }

SearchState evaluate_and_select(const SearchState& state, std::size_t index,
                                CandidateSet& candidates, const QuerySolutionPair& pair,
                                Scorer& scorer, std::size_t pass, const AssetStore& assets) {
  state.trajectory.at(index);
  const std::size_t original = candidates.original_index();

  for (std::size_t c = 0; c < candidates.candidates.size(); ++c) {
    auto& cand = candidates.candidates[c];
    if (c == original) {
      cand.score = state.ppl;
      continue;
    }
    try {
      const auto trial = replace_segment(state.trajectory, index, cand.text);
      cand.score = scorer.score(assemble_scoring_prompt(pair, trial, assets)).ppl;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kScorerFailure, "scoring candidate " + std::to_string(c) +
                                                 " for segment " + std::to_string(index) +
                                                 " failed: " + e.what());
    }
  }

  std::size_t best = original;
  double best_score = state.ppl;
  for (std::size_t c = 0; c < candidates.candidates.size(); ++c) {
    if (c == original) continue;
    if (*candidates.candidates[c].score < best_score) {
      best = c;
      best_score = *candidates.candidates[c].score;
    }
  }

  SearchState next = state;
  if (best != original) {
    next.trajectory = replace_segment(state.trajectory, index, candidates.candidates[best].text);
  }
  next.ppl = best_score;
  next.iterations = state.iterations + 1;
  next.step_log.push_back(StepLogEntry{pass, index, candidates.candidates[best].origin, best,
                                       candidates.candidates.size(), state.ppl, best_score});
  return next;
}

SynthesisRecord run_search(const QuerySolutionPair& pair, const SearchConfig& config,
                           const SearchEnvironment& env) {
  config.validate();
  pair.validate();
  const std::uint64_t pair_seed = mix_seed(config.seed, fnv1a64(pair.id));

  const auto initial = init_trajectory(pair, env.generator, env.generation,
                                       mix_seed(pair_seed, 0), env.assets);
  const auto initial_score = env.scorer.score(assemble_scoring_prompt(pair, initial, env.assets));

  SynthesisRecord record;
  record.pair_id = pair.id;
  record.category = pair.category;
  record.initial_trajectory = initial;
  record.initial_ppl = initial_score.ppl;
  record.scorer_id = env.scorer.id();
  record.generator_id = env.generator.id();
  const auto versions = env.assets.versions();
  for (auto name : {assets::kInitialThinking, assets::kSegmentEdit, assets::kScoring}) {
    record.template_versions[std::string(name)] = versions.at(std::string(name));
  }

  SearchState state{initial, initial_score.ppl, {}, 0};
  StopReason stop = StopReason::kPassesExhausted;
  const std::size_t n = initial.size();

  for (std::size_t pass = 0; pass < config.passes && stop == StopReason::kPassesExhausted; ++pass) {
    for (std::size_t i = 0; i < n; ++i) {
      if (config.ppl_threshold && state.ppl <= *config.ppl_threshold) {
        stop = StopReason::kThreshold;
        break;
      }
      if (state.iterations >= config.max_iterations) {
        stop = StopReason::kBudget;
        break;
      }
      const auto step_seed = mix_seed(pair_seed, 1 + state.iterations);
      const auto ctx = RefinementContext::around(pair, state.trajectory, i, state.iterations);
      auto candidates = expand_segment(ctx, config.candidates_per_expansion, env.generator,
                                       env.generation, step_seed, env.assets);
      try {
        state = evaluate_and_select(state, i, candidates, pair, env.scorer, pass, env.assets);
      } catch (const Error& e) {
        record.degraded = true;
        record.error = e.what();
        stop = StopReason::kDegraded;
        break;
      }
      if (env.progress) {
        const auto& last = state.step_log.back();
        env.progress(ProgressEvent{pair.id, pass, i, last.ppl_before, last.ppl_after});
      }
      if (!candidates.errors.empty()) {
        record.degraded = true;
        record.error = candidates.errors.front();
        stop = StopReason::kDegraded;
        break;
      }
    }
    if (stop == StopReason::kPassesExhausted) ++record.passes_completed;
  }

  record.final_trajectory = state.trajectory;
  record.final_ppl = state.ppl;
  record.iterations = state.iterations;
  record.step_log = std::move(state.step_log);
  record.stop_reason = stop;
  return record;
}

BatchOutcome run_batch(const std::vector<QuerySolutionPair>& pairs, const SearchConfig& config,
                       const SearchEnvironment& env, std::size_t workers,
                       const std::function<void(const SynthesisRecord&)>& sink,
                       const std::atomic<bool>* stop) {
  enum class Slot { kPending, kDone, kFailed };
  std::vector<Slot> slots(pairs.size(), Slot::kPending);
  std::vector<std::optional<SynthesisRecord>> results(pairs.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t next_emit = 0;
  BatchOutcome outcome;

  auto worker = [&] {
    while (!(stop && stop->load())) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pairs.size()) return;
      std::optional<SynthesisRecord> rec;
      std::string failure;
      try {
        rec = run_search(pairs[i], config, env);
      } catch (const std::exception& e) {
        failure = pairs[i].id + ": " + e.what();
      }
      std::lock_guard lock(mu);
      if (rec) {
        slots[i] = Slot::kDone;
        ++outcome.completed;
        if (rec->degraded) ++outcome.degraded;
        results[i] = std::move(rec);
      } else {
        slots[i] = Slot::kFailed;
        ++outcome.failed;
        outcome.failures.push_back(failure);
      }
      while (next_emit < pairs.size() && slots[next_emit] != Slot::kPending) {
        if (slots[next_emit] == Slot::kDone) {
          sink(*results[next_emit]);
          results[next_emit].reset();
        }
        ++next_emit;
      }
    }
  };

  const std::size_t count = std::max<std::size_t>(1, std::min(workers, pairs.size()));
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < count; ++t) threads.emplace_back(worker);
  }
  // After a stop request, later pairs may have finished while an earlier one
  // was never started; flush them so no completed work is lost.
  for (; next_emit < pairs.size(); ++next_emit) {
    if (slots[next_emit] == Slot::kDone) sink(*results[next_emit]);
  }
  std::sort(outcome.failures.begin(), outcome.failures.end());
  return outcome;
}

}  // namespace reer
