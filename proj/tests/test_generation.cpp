// SPDX-License-Identifier: Apache-2.0
#include "reer/generation.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "oracles.hpp"
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

const QuerySolutionPair kPair{"g1", "Write a toast for my sister.",
                              "Raise your glasses to Ana, who taught me to ride a bike and to "
                              "forgive quickly. May her year be as kind as she is.",
                              "other", Source::kFixture};

RefinementContext context_at(std::size_t index) {
  const Trajectory t(Texts{"I start with who Ana is.", "Then a memory.", "Then the wish."});
  return RefinementContext::around(kPair, t, index, 0);
}

TEST(PromptTest, InitialPromptCarriesQueryAndSolution) {
  const auto p = render_initial_prompt(kPair);
  EXPECT_NE(p.find(kPair.query), std::string::npos);
  EXPECT_NE(p.find(kPair.solution), std::string::npos);
  EXPECT_EQ(p, render_initial_prompt(kPair));
  EXPECT_EQ(p.find("{query}"), std::string::npos);
}

TEST(PromptTest, EditPromptMarksTarget) {
  const auto ctx = context_at(1);
  EXPECT_EQ(ctx.prefix.size(), 1u);
  EXPECT_EQ(ctx.suffix.size(), 1u);
  EXPECT_EQ(ctx.target.index, 1u);
  const auto p = render_edit_prompt(ctx);
  EXPECT_NE(p.find("<replace>\nThen a memory.\n</replace>"), std::string::npos);
  EXPECT_NE(p.find("I start with who Ana is."), std::string::npos);
  EXPECT_NE(p.find("Then the wish."), std::string::npos);
  EXPECT_LT(p.find("I start with who Ana is."), p.find("Then a memory."));
  EXPECT_LT(p.find("Then a memory."), p.find("Then the wish."));
  EXPECT_EQ(p, render_edit_prompt(context_at(1)));
}

// prefix ++ [target] ++ suffix always covers 0..n-1 in order.
TEST(PromptTest, ContextIndicesAreContiguous) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 100; ++iter) {
    Texts texts;
    for (std::size_t i = 0; i < 1 + rng() % 8; ++i) texts.push_back(testing::random_words(rng, 3));
    const Trajectory t(texts);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto ctx = RefinementContext::around(kPair, t, i, 0);
      std::vector<Segment> all = ctx.prefix;
      all.push_back(ctx.target);
      all.insert(all.end(), ctx.suffix.begin(), ctx.suffix.end());
      ASSERT_EQ(all.size(), t.size());
      for (std::size_t j = 0; j < all.size(); ++j) EXPECT_EQ(all[j].index, j);
    }
  }
}

TEST(ExtractTest, TaggedBodies) {
  EXPECT_EQ(extract_tagged("chat <refine>a</refine> more <refine>b c</refine> tail", "refine"),
            (Texts{"a", "b c"}));
  EXPECT_EQ(extract_tagged("<refine>open only", "refine"), Texts{});
  EXPECT_EQ(extract_tagged("<refine></refine>", "refine"), Texts{""});
  EXPECT_EQ(extract_tagged("no tags", "refine"), Texts{});
}

TEST(ExtractTest, StripThinkWrapper) {
  EXPECT_EQ(strip_think_wrapper("<think>p1\n\np2</think>"), "p1\n\np2");
  EXPECT_EQ(strip_think_wrapper("noise <think> x </think> tail"), "x");
  EXPECT_EQ(strip_think_wrapper("plain"), "plain");
  EXPECT_EQ(strip_think_wrapper("<think>\n</think>"), "");
}

TEST(InitTest, ScriptedWrapperSplit) {
  ScriptedBackend b;
  b.on_prompt(render_initial_prompt(kPair), {"<think>p1\n\np2</think>"});
  const auto t = init_trajectory(kPair, b, GenerationConfig{}, 0);
  EXPECT_EQ(t.texts(), (Texts{"p1", "p2"}));
}

TEST(InitTest, EmptyOutputAndFailure) {
  ScriptedBackend b;
  b.on_prompt(render_initial_prompt(kPair), {""});
  EXPECT_EQ(code_of([&] { init_trajectory(kPair, b, GenerationConfig{}, 0); }),
            ErrorCode::kEmptyOutput);
  ScriptedBackend none;
  EXPECT_EQ(code_of([&] { init_trajectory(kPair, none, GenerationConfig{}, 0); }),
            ErrorCode::kGeneratorFailure);
}

TEST(InitTest, ScriptedFixtureOutput) {
  ScriptedBackend b;
  b.on_prompt(render_initial_prompt(kPair),
              {"Okay.\n<think>\nFirst I look at who the toast is for.\r\n\r\nThen   I pick one "
               "memory.  \nIt should be short.\n\n\n\nLast, a wish.\n</think>\nextra"});
  const auto t = init_trajectory(kPair, b, GenerationConfig{}, 0);
  EXPECT_EQ(t.texts(), (Texts{"First I look at who the toast is for.",
                              "Then   I pick one memory.\nIt should be short.", "Last, a wish."}));
}

TEST(InitTest, DeterministicGeneratorIsSeeded) {
  DeterministicBackend b;
  const auto t1 = init_trajectory(kPair, b, GenerationConfig{}, 7);
  EXPECT_EQ(t1, init_trajectory(kPair, b, GenerationConfig{}, 7));
  EXPECT_EQ(t1.size(), 3u);
  EXPECT_NE(init_trajectory(kPair, b, GenerationConfig{}, 8), t1);
}

TEST(ExpandTest, ZeroCandidatesKeepsOnlyOriginal) {
  ScriptedBackend b;
  const auto set = expand_segment(context_at(0), 0, b, GenerationConfig{}, 1);
  ASSERT_EQ(set.candidates.size(), 1u);
  EXPECT_EQ(set.candidates[0].origin, CandidateOrigin::kOriginal);
  EXPECT_EQ(set.candidates[0].text, "I start with who Ana is.");
  EXPECT_EQ(b.calls(), 0u);
}

TEST(ExpandTest, ThreeDistinctRefinements) {
  ScriptedBackend b;
  const auto ctx = context_at(1);
  b.on_prompt(render_edit_prompt(ctx),
              {"Sure. <refine>Hmm, the bike story.</refine>", "<refine>Maybe the kitchen?</refine>",
               "<refine>Wait, forgiveness first.</refine>"});
  const auto set = expand_segment(ctx, 3, b, GenerationConfig{}, 1);
  ASSERT_EQ(set.candidates.size(), 4u);
  EXPECT_EQ(set.candidates[0].text, "Hmm, the bike story.");
  EXPECT_EQ(set.candidates[1].text, "Maybe the kitchen?");
  EXPECT_EQ(set.candidates[2].text, "Wait, forgiveness first.");
  EXPECT_EQ(set.candidates[3].origin, CandidateOrigin::kOriginal);
  EXPECT_EQ(set.original_index(), 3u);
  EXPECT_EQ(b.calls(), 3u);
}

TEST(ExpandTest, VerbatimCopyDiscarded) {
  ScriptedBackend b;
  const auto ctx = context_at(0);
  // Twelve consecutive words of the solution.
  b.on_prompt(render_edit_prompt(ctx),
              {"<refine>Raise your glasses to Ana, who taught me to ride a bike and</refine>",
               "<refine>A toast, in my own words.</refine>"});
  const auto set = expand_segment(ctx, 2, b, GenerationConfig{}, 1);
  ASSERT_EQ(set.candidates.size(), 2u);
  EXPECT_EQ(set.candidates[0].text, "A toast, in my own words.");
  EXPECT_EQ(set.discarded_copy, 1u);
}

TEST(ExpandTest, EmptyDuplicateOverflowAndErrors) {
  ScriptedBackend b;
  const auto ctx = context_at(2);
  b.on_prompt(render_edit_prompt(ctx), {"<refine>  </refine><refine>x</refine><refine>y</refine>",
                                        "<refine>x</refine><refine>Then the wish.</refine>",
                                        "no tags at all"});
  auto set = expand_segment(ctx, 3, b, GenerationConfig{}, 1);
  EXPECT_EQ(set.candidates.size(), 3u);
  EXPECT_EQ(set.discarded_empty, 1u + 1u);
  EXPECT_EQ(set.discarded_duplicate, 2u);
  EXPECT_EQ(set.errors.size(), 0u);

  ScriptedBackend failing;
  failing.on_prompt(render_edit_prompt(ctx), {"<refine>z</refine>"});
  failing.fail_next(2, ErrorCode::kTransport);
  set = expand_segment(ctx, 3, failing, GenerationConfig{}, 1);
  EXPECT_EQ(set.errors.size(), 2u);
  EXPECT_EQ(set.candidates.size(), 2u);
  EXPECT_EQ(set.candidates.back().origin, CandidateOrigin::kOriginal);
}

TEST(ExpandTest, SamplingSeedsDiffer) {
  auto inner = std::make_shared<ScriptedBackend>();
  const auto ctx = context_at(0);
  inner->on_prompt(render_edit_prompt(ctx), {"<refine>a</refine>"});
  std::set<std::string> hashes;
  struct Spy : Backend {
    std::shared_ptr<Backend> in;
    std::set<std::string>* hashes;
    BackendReply call(const CompletionRequest& r) override {
      hashes->insert(r.sampling.dump());
      return in->call(r);
    }
    std::string id() const override { return "spy"; }
  } spy;
  spy.in = inner;
  spy.hashes = &hashes;
  GenerationConfig cfg;
  cfg.sampling = json{{"temperature", 0.9}};
  expand_segment(ctx, 4, spy, cfg, 42);
  EXPECT_EQ(hashes.size(), 4u);
  for (const auto& h : hashes) EXPECT_NE(h.find("\"temperature\":0.9"), std::string::npos);
}

// No surviving candidate shares more than L words with the solution, checked
// by an exhaustive sliding window; the original appears exactly once.
TEST(ExpandTest, NoCopyProperty) {
  std::mt19937_64 rng(17);
  for (int iter = 0; iter < 200; ++iter) {
    QuerySolutionPair pair{"r", "q", testing::random_words(rng, 20), "other", Source::kFixture};
    const Trajectory t(Texts{"first idea", "second idea"});
    const auto ctx = RefinementContext::around(pair, t, rng() % 2, 0);
    Texts replies;
    for (int j = 0; j < 4; ++j) {
      std::string body;
      if (rng() % 2) {
        const auto words = text::split_whitespace(pair.solution);
        const std::size_t start = rng() % 10, len = 1 + rng() % 9;
        for (std::size_t w = start; w < std::min(words.size(), start + len); ++w) {
          body += std::string(words[w]) + " ";
        }
      }
      body += testing::random_words(rng, 1 + rng() % 6);
      replies.push_back("<refine>" + body + "</refine>");
    }
    ScriptedBackend b;
    b.on_prompt(render_edit_prompt(ctx), replies);
    const std::size_t L = 1 + rng() % 5;
    GenerationConfig cfg;
    cfg.no_copy_span = L;
    const auto set = expand_segment(ctx, 4, b, cfg, iter);
    std::size_t originals = 0;
    for (const auto& c : set.candidates) {
      if (c.origin == CandidateOrigin::kOriginal) {
        ++originals;
        EXPECT_EQ(c.text, ctx.target.text);
        continue;
      }
      EXPECT_FALSE(oracle::shares_span(c.text, pair.solution, L)) << c.text;
    }
    EXPECT_EQ(originals, 1u);
    EXPECT_LE(set.candidates.size(), 5u);
  }
}

TEST(NoCopyTest, MatchesOracle) {
  std::mt19937_64 rng(99);
  for (int iter = 0; iter < 500; ++iter) {
    const auto a = testing::random_words(rng, 1 + rng() % 15) + (rng() % 2 ? "." : "");
    const auto b = testing::random_words(rng, 1 + rng() % 15);
    const std::size_t L = 1 + rng() % 3;
    EXPECT_EQ(shares_verbatim_span(a, b, L), oracle::shares_span(a, b, L)) << a << " | " << b;
  }
  EXPECT_TRUE(shares_verbatim_span("One, Two three FOUR five!", "one two three four five", 4));
  EXPECT_FALSE(shares_verbatim_span("one two three four", "one two three four", 4));
}

TEST(PatternCheckTest, Examples) {
  const std::vector<std::string> pats{"hmm", "wait", "maybe"};
  const auto counts = inject_thinking_patterns_check("Hmm, maybe X. Wait no.", pats);
  EXPECT_EQ(counts, (std::map<std::string, std::size_t>{{"hmm", 1}, {"wait", 1}, {"maybe", 1}}));
  const auto zeros = inject_thinking_patterns_check("plain text here", pats);
  for (const auto& [p, c] : zeros) EXPECT_EQ(c, 0u) << p;
  EXPECT_EQ(code_of([&] { inject_thinking_patterns_check("x", {}); }), ErrorCode::kInvalidArgument);
}

// Trajectories from the fixture pairs, counted by two independent routes.
TEST(PatternCheckTest, FixtureTrajectoriesMatchRegexScan) {
  const auto pairs = ingest_pairs(testing::fixture_dir() / "pairs.jsonl").pairs;
  ASSERT_EQ(pairs.size(), 50u);
  const auto patterns = AssetStore::builtin().patterns();
  DeterministicBackend gen;
  for (const auto& pair : pairs) {
    const auto t = init_trajectory(pair, gen, GenerationConfig{}, 0);
    const auto ctx = RefinementContext::around(pair, t, 0, 0);
    auto set = expand_segment(ctx, 2, gen, GenerationConfig{}, 0);
    std::string text = join_trajectory(t);
    for (const auto& c : set.candidates) text += "\n\n" + c.text;
    const auto counts = inject_thinking_patterns_check(text, patterns);
    for (const auto& p : patterns) {
      EXPECT_EQ(counts.at(p), oracle::regex_count(text, p)) << pair.id << " " << p;
    }
  }
}

}  // namespace
}  // namespace reer
