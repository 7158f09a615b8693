// SPDX-License-Identifier: Apache-2.0
#include "reer/search.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <mutex>
#include <random>

#include "reer/cli.hpp"
#include "reer/dataset.hpp"
#include "test_support.hpp"

namespace reer {
namespace {

using nlohmann::json;
using Texts = std::vector<std::string>;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an exception";
  return ErrorCode::kIo;
}

/// Perplexity chosen by a callback on the scoring prompt.
class FnScorer : public Scorer {
 public:
  explicit FnScorer(std::function<double(const std::string&)> fn) : fn_(std::move(fn)) {}
  ScoreResult score(const ScoreContext& context) override {
    ScoreResult r;
    r.ppl = fn_(context.prompt);
    r.token_count = 1;
    r.scorer_id = id();
    return r;
  }
  std::string id() const override { return "fn"; }

 private:
  std::function<double(const std::string&)> fn_;
};

const QuerySolutionPair kPair{"s1", "Name a color.", "Blue, like the sea.", "other",
                              Source::kFixture};

SearchState start(double ppl) {
  return SearchState{Trajectory(Texts{"alpha", "beta", "gamma"}), ppl, {}, 0};
}

CandidateSet candidates(const Texts& generated, const std::string& original) {
  CandidateSet set;
  for (const auto& g : generated) set.candidates.push_back({g, std::nullopt, CandidateOrigin::kGenerated});
  set.candidates.push_back({original, std::nullopt, CandidateOrigin::kOriginal});
  return set;
}

double by_marker(const std::string& prompt) {
  if (prompt.find("zq-good") != std::string::npos) return 5.0;
  if (prompt.find("zq-tie") != std::string::npos) return 10.0;
  if (prompt.find("zq-better") != std::string::npos) return 4.0;
  return 20.0;
}

TEST(SelectTest, AllWorseKeepsOriginal) {
  FnScorer scorer(by_marker);
  auto set = candidates({"worse one", "worse two"}, "beta");
  const auto next = evaluate_and_select(start(10.0), 1, set, kPair, scorer);
  EXPECT_EQ(next.trajectory.texts(), (Texts{"alpha", "beta", "gamma"}));
  EXPECT_EQ(next.ppl, 10.0);
  ASSERT_EQ(next.step_log.size(), 1u);
  EXPECT_EQ(next.step_log[0].chosen_origin, CandidateOrigin::kOriginal);
  EXPECT_EQ(next.step_log[0].ppl_before, 10.0);
  EXPECT_EQ(next.step_log[0].ppl_after, 10.0);
  EXPECT_EQ(next.iterations, 1u);
  EXPECT_EQ(*set.candidates[0].score, 20.0);
  EXPECT_EQ(*set.candidates[2].score, 10.0);
}

TEST(SelectTest, LowerCandidateReplaces) {
  FnScorer scorer(by_marker);
  auto set = candidates({"worse", "zq-good", "zq-better"}, "beta");
  const auto next = evaluate_and_select(start(10.0), 1, set, kPair, scorer);
  EXPECT_EQ(next.trajectory.texts(), (Texts{"alpha", "zq-better", "gamma"}));
  EXPECT_EQ(next.ppl, 4.0);
  EXPECT_EQ(next.step_log[0].chosen_origin, CandidateOrigin::kGenerated);
  EXPECT_EQ(next.step_log[0].chosen_ordinal, 2u);
  EXPECT_EQ(next.step_log[0].candidates_scored, 4u);
}

TEST(SelectTest, TieKeepsOriginalThenLowestOrdinal) {
  FnScorer scorer(by_marker);
  auto set = candidates({"zq-tie"}, "beta");
  auto next = evaluate_and_select(start(10.0), 1, set, kPair, scorer);
  EXPECT_EQ(next.step_log[0].chosen_origin, CandidateOrigin::kOriginal);
  EXPECT_EQ(next.trajectory[1].text, "beta");

  auto twins = candidates({"zq-good a", "zq-good b"}, "beta");
  next = evaluate_and_select(start(10.0), 1, twins, kPair, scorer);
  EXPECT_EQ(next.trajectory[1].text, "zq-good a");
  EXPECT_EQ(next.step_log[0].chosen_ordinal, 0u);
}

TEST(SelectTest, ScorerFailureKeepsPartialScores) {
  FnScorer scorer([](const std::string& p) -> double {
    if (p.find("boom") != std::string::npos) throw Error(ErrorCode::kTransport, "down");
    return by_marker(p);
  });
  auto set = candidates({"zq-good", "boom", "zq-better"}, "beta");
  const auto before = start(10.0);
  EXPECT_EQ(code_of([&] { evaluate_and_select(before, 1, set, kPair, scorer); }),
            ErrorCode::kScorerFailure);
  EXPECT_EQ(*set.candidates[0].score, 5.0);
  EXPECT_FALSE(set.candidates[1].score.has_value());
  EXPECT_EQ(before.trajectory[1].text, "beta");
}

TEST(SelectTest, Preconditions) {
  FnScorer scorer(by_marker);
  auto set = candidates({"x"}, "beta");
  EXPECT_EQ(code_of([&] { evaluate_and_select(start(1.0), 3, set, kPair, scorer); }),
            ErrorCode::kIndexOutOfRange);
  CandidateSet no_original;
  no_original.candidates.push_back({"x", std::nullopt, CandidateOrigin::kGenerated});
  EXPECT_THROW(evaluate_and_select(start(1.0), 0, no_original, kPair, scorer), Error);
}

// ---------------------------------------------------------------------------
// Full search with the offline generator and the reference scorer.

struct Offline {
  DeterministicBackend generator;
  ReferenceScorer scorer{ReferenceLM::train(cli::default_reference_corpus(AssetStore::builtin()), 4, true),
                         true};
  SearchEnvironment env() { return SearchEnvironment{generator, scorer, GenerationConfig{}}; }
};

Offline& offline() {
  static Offline o;
  return o;
}

std::vector<QuerySolutionPair> fixture_pairs() {
  return ingest_pairs(testing::fixture_dir() / "pairs.jsonl").pairs;
}

TEST(SearchTest, ZeroBudgetReturnsInitial) {
  SearchConfig cfg;
  cfg.max_iterations = 0;
  const auto r = run_search(kPair, cfg, offline().env());
  EXPECT_EQ(r.final_trajectory, r.initial_trajectory);
  EXPECT_EQ(r.final_ppl, r.initial_ppl);
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_EQ(r.stop_reason, StopReason::kBudget);
}

TEST(SearchTest, ThresholdAboveInitialStopsBeforeWork) {
  CountingBackend counting(std::make_shared<DeterministicBackend>());
  SearchConfig cfg;
  cfg.ppl_threshold = 1e9;
  const auto r = run_search(kPair, cfg, SearchEnvironment{counting, offline().scorer, GenerationConfig{}});
  EXPECT_EQ(r.stop_reason, StopReason::kThreshold);
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_EQ(counting.calls(), 1u);  // the initial trajectory only
}

// Frozen from a reference run of this exact setup.
TEST(SearchTest, ThreeSegmentsTwoPassesFixture) {
  SearchConfig cfg;
  cfg.passes = 2;
  cfg.candidates_per_expansion = 3;
  cfg.seed = 11;
  const auto r1 = run_search(kPair, cfg, offline().env());
  ASSERT_EQ(r1.initial_trajectory.size(), 3u);
  EXPECT_EQ(r1.step_log.size(), 6u);
  EXPECT_EQ(r1.passes_completed, 2u);
  EXPECT_EQ(r1.stop_reason, StopReason::kPassesExhausted);
  double prev = r1.initial_ppl;
  for (const auto& s : r1.step_log) {
    EXPECT_EQ(s.ppl_before, prev);
    EXPECT_LE(s.ppl_after, s.ppl_before);
    prev = s.ppl_after;
  }
  EXPECT_EQ(r1.final_ppl, prev);
  EXPECT_NEAR(r1.initial_ppl, 22.14550722063133, 1e-9);
  EXPECT_NEAR(r1.final_ppl, 14.234376320608177, 1e-9);
  const std::vector<std::size_t> ordinals{0, 0, 2, 0, 2, 2};
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(r1.step_log[i].segment, i % 3);
    EXPECT_EQ(r1.step_log[i].chosen_ordinal, ordinals[i]);
  }
  EXPECT_EQ(r1.to_jsonl(), run_search(kPair, cfg, offline().env()).to_jsonl());
}

TEST(SearchTest, RecordProvenance) {
  const auto r = run_search(kPair, SearchConfig{}, offline().env());
  EXPECT_EQ(r.pair_id, "s1");
  EXPECT_EQ(r.category, "other");
  EXPECT_EQ(r.generator_id, "deterministic");
  EXPECT_EQ(r.scorer_id, offline().scorer.id());
  EXPECT_EQ(r.template_versions.size(), 3u);
  EXPECT_EQ(r.template_versions.count("scoring"), 1u);
  const auto back = SynthesisRecord::from_json(json::parse(r.to_jsonl()));
  EXPECT_EQ(back.to_jsonl(), r.to_jsonl());
}

// Monotone descent, budget, segment count and locality over many runs.
TEST(SearchTest, InvariantsAcrossSeeds) {
  const auto pairs = fixture_pairs();
  std::mt19937_64 rng(1);
  for (int run = 0; run < 120; ++run) {
    SearchConfig cfg;
    cfg.seed = rng();
    cfg.passes = 1 + rng() % 3;
    cfg.candidates_per_expansion = rng() % 4;
    cfg.max_iterations = rng() % 10;
    const auto& pair = pairs[rng() % pairs.size()];
    const auto r = run_search(pair, cfg, offline().env());
    const std::size_t n = r.initial_trajectory.size();
    EXPECT_EQ(r.final_trajectory.size(), n);
    EXPECT_LE(r.final_ppl, r.initial_ppl);
    EXPECT_LE(r.iterations, cfg.max_iterations);
    EXPECT_LE(r.iterations, cfg.passes * n);
    EXPECT_EQ(r.iterations, r.step_log.size());
    for (const auto& s : r.step_log) EXPECT_LE(s.ppl_after, s.ppl_before);
    if (!r.step_log.empty()) EXPECT_EQ(r.final_ppl, r.step_log.back().ppl_after);
    if (cfg.candidates_per_expansion == 0) EXPECT_EQ(r.final_trajectory, r.initial_trajectory);
  }
}

TEST(SearchTest, StepChangesOnlyItsSegment) {
  QuerySolutionPair pair = kPair;
  std::vector<Trajectory> seen;
  SearchState state{init_trajectory(pair, offline().generator, GenerationConfig{}, 3), 0.0, {}, 0};
  state.ppl = offline().scorer.score(assemble_scoring_prompt(pair, state.trajectory)).ppl;
  for (std::size_t i = 0; i < state.trajectory.size(); ++i) {
    auto set = expand_segment(RefinementContext::around(pair, state.trajectory, i, i), 4,
                              offline().generator, GenerationConfig{}, 100 + i);
    const auto next = evaluate_and_select(state, i, set, pair, offline().scorer);
    for (std::size_t j = 0; j < state.trajectory.size(); ++j) {
      if (j != i) EXPECT_EQ(next.trajectory[j], state.trajectory[j]);
    }
    state = next;
  }
}

TEST(SearchTest, InitFailurePropagatesLaterFailureDegrades) {
  ScriptedBackend empty;
  EXPECT_EQ(code_of([&] {
              run_search(kPair, SearchConfig{}, SearchEnvironment{empty, offline().scorer, GenerationConfig{}});
            }),
            ErrorCode::kGeneratorFailure);

  // The first expansion call fails, so the run stops after one step.
  struct FailAfter : Backend {
    DeterministicBackend inner;
    std::atomic<int> left{1};
    BackendReply call(const CompletionRequest& r) override {
      if (left-- <= 0) throw Error(ErrorCode::kTransport, "gone");
      return inner.call(r);
    }
    std::string id() const override { return "fail-after"; }
  } flaky;
  const auto r = run_search(kPair, SearchConfig{}, SearchEnvironment{flaky, offline().scorer, GenerationConfig{}});
  EXPECT_TRUE(r.degraded);
  EXPECT_EQ(r.stop_reason, StopReason::kDegraded);
  EXPECT_NE(r.error.find("gone"), std::string::npos);
  EXPECT_LE(r.final_ppl, r.initial_ppl);
  EXPECT_EQ(r.step_log.size(), 1u);
}

TEST(SearchTest, ProgressEvents) {
  std::vector<ProgressEvent> events;
  auto env = offline().env();
  env.progress = [&](const ProgressEvent& e) { events.push_back(e); };
  SearchConfig cfg;
  cfg.max_iterations = 4;
  const auto r = run_search(kPair, cfg, env);
  ASSERT_EQ(events.size(), r.step_log.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(events[i].pair_id, "s1");
    EXPECT_EQ(events[i].segment, r.step_log[i].segment);
    EXPECT_EQ(events[i].ppl_after, r.step_log[i].ppl_after);
  }
}

TEST(SearchConfigTest, Validation) {
  SearchConfig c;
  EXPECT_NO_THROW(c.validate());
  c.passes = 0;
  EXPECT_THROW(c.validate(), Error);
  c = SearchConfig{};
  c.ppl_threshold = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = SearchConfig{};
  c.candidates_per_expansion = 0;
  EXPECT_NO_THROW(c.validate());
  c.ppl_threshold = 2.5;
  EXPECT_EQ(SearchConfig::from_json(c.to_json()).to_json(), c.to_json());
}

// ---------------------------------------------------------------------------
// Batches.

std::vector<std::string> batch_lines(const std::vector<QuerySolutionPair>& pairs, std::size_t workers,
                                     BatchOutcome* outcome = nullptr) {
  std::vector<std::string> lines;
  SearchConfig cfg;
  cfg.max_iterations = 4;
  auto o = run_batch(pairs, cfg, offline().env(), workers,
                     [&](const SynthesisRecord& r) { lines.push_back(r.to_jsonl()); });
  if (outcome) *outcome = o;
  return lines;
}

TEST(BatchTest, WorkerCountDoesNotChangeOutput) {
  auto pairs = fixture_pairs();
  pairs.resize(12);
  const auto one = batch_lines(pairs, 1);
  ASSERT_EQ(one.size(), 12u);
  EXPECT_EQ(batch_lines(pairs, 4), one);
  EXPECT_EQ(batch_lines(pairs, 32), one);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(json::parse(one[i])["pair_id"], pairs[i].id);
  }
}

TEST(BatchTest, FailedPairsAreCountedAndSkipped) {
  auto pairs = fixture_pairs();
  pairs.resize(5);
  // The offline generator cannot answer a prompt that lost its solution marker.
  struct Picky : Backend {
    DeterministicBackend inner;
    BackendReply call(const CompletionRequest& r) override {
      if (r.prompt.find("fx-poison") != std::string::npos) throw Error(ErrorCode::kTransport, "x");
      return inner.call(r);
    }
    std::string id() const override { return "picky"; }
  } picky;
  pairs[2].query += " fx-poison";
  std::vector<std::string> ids;
  const auto outcome = run_batch(pairs, SearchConfig{}, SearchEnvironment{picky, offline().scorer, GenerationConfig{}},
                                 3, [&](const SynthesisRecord& r) { ids.push_back(r.pair_id); });
  EXPECT_EQ(outcome.completed, 4u);
  EXPECT_EQ(outcome.failed, 1u);
  ASSERT_EQ(outcome.failures.size(), 1u);
  EXPECT_EQ(outcome.failures[0].rfind(pairs[2].id + ": ", 0), 0u);
  EXPECT_EQ(ids, (Texts{pairs[0].id, pairs[1].id, pairs[3].id, pairs[4].id}));
}

TEST(BatchTest, StopFlagTakesNoMorePairs) {
  auto pairs = fixture_pairs();
  std::atomic<bool> stop{false};
  std::size_t emitted = 0;
  SearchConfig cfg;
  cfg.max_iterations = 2;
  const auto outcome = run_batch(pairs, cfg, offline().env(), 2,
                                 [&](const SynthesisRecord&) {
                                   if (++emitted == 3) stop = true;
                                 },
                                 &stop);
  EXPECT_GE(emitted, 3u);
  EXPECT_LT(emitted, pairs.size());
  EXPECT_EQ(outcome.completed, emitted);

  std::atomic<bool> already{true};
  std::size_t none = 0;
  run_batch(pairs, cfg, offline().env(), 2, [&](const SynthesisRecord&) { ++none; }, &already);
  EXPECT_EQ(none, 0u);
}

}  // namespace
}  // namespace reer
