// SPDX-License-Identifier: Apache-2.0
#include "reer/core.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "reer/errors.hpp"
#include "test_support.hpp"

namespace reer {
namespace {

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

TEST(SegmentTest, SingleParagraph) {
  EXPECT_EQ(segment_trajectory("plan A").texts(), Texts{"plan A"});
}

TEST(SegmentTest, BlankLineSplits) {
  EXPECT_EQ(segment_trajectory("p1\n\np2").texts(), (Texts{"p1", "p2"}));
}

TEST(SegmentTest, NormalizesDelimitersAndTrailingSpace) {
  const auto t = segment_trajectory("\n\n  a  \r\nb\t\n\n\n \n c \n");
  EXPECT_EQ(t.texts(), (Texts{"  a\nb", " c"}));
  EXPECT_EQ(normalize_text("\n\n  a  \r\nb\t\n\n\n \n c \n"), "  a\nb\n\n c");
}

TEST(SegmentTest, WhitespaceOnlyIsEmptyInput) {
  EXPECT_EQ(code_of([] { segment_trajectory(" \n\t\n "); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(code_of([] { segment_trajectory(""); }), ErrorCode::kEmptyInput);
}

TEST(SegmentTest, LinePolicySplitsEveryLine) {
  EXPECT_EQ(segment_trajectory("a\nb\n\nc", SegmentationPolicy::kLine).texts(),
            (Texts{"a", "b", "c"}));
}

TEST(SegmentTest, IndicesAreContiguous) {
  const auto t = segment_trajectory("x\n\ny\n\nz");
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i].index, i);
}

TEST(JoinTest, Examples) {
  EXPECT_EQ(join_trajectory(Trajectory(Texts{"a"})), "a");
  EXPECT_EQ(join_trajectory(Trajectory(Texts{"a", "b"})), "a\n\nb");
}

TEST(TrajectoryTest, RejectsInvalidSegments) {
  EXPECT_EQ(code_of([] { Trajectory(Texts{}); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(code_of([] { Trajectory(Texts{"a\n\nb"}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { Trajectory(Texts{"a "}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { Trajectory(Texts{""}); }), ErrorCode::kInvalidArgument);
}

TEST(ReplaceTest, Examples) {
  const Trajectory ab(Texts{"a", "b"});
  EXPECT_EQ(replace_segment(ab, 1, "c").texts(), (Texts{"a", "c"}));
  EXPECT_EQ(ab.texts(), (Texts{"a", "b"}));  // value semantics
  const Trajectory a(Texts{"a"});
  EXPECT_EQ(replace_segment(a, 0, "a"), a);
  EXPECT_EQ(code_of([&] { replace_segment(a, 2, "c"); }), ErrorCode::kIndexOutOfRange);
  EXPECT_EQ(code_of([&] { replace_segment(a, 0, " \n"); }), ErrorCode::kEmptyReplacement);
}

TEST(ReplaceTest, MultiParagraphReplacementRejected) {
  const Trajectory a(Texts{"a", "b"});
  EXPECT_THROW(replace_segment(a, 0, "x\n\ny"), Error);
}

TEST(SingleParagraphTest, CollapsesBlankLines) {
  EXPECT_EQ(to_single_paragraph("\n x \n\n\ny  \n"), " x\ny");
}

// Property: join(segment(t)) == normalize(t) and segment(join(T)) == T.
TEST(CorePropertyTest, RoundTripOverRandomParagraphSets) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> count(1, 8), extra(0, 3);
  for (int iter = 0; iter < 500; ++iter) {
    Texts paras;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) paras.push_back(testing::random_paragraph(rng));
    const Trajectory t(paras);
    EXPECT_EQ(segment_trajectory(join_trajectory(t)), t);

    std::string messy = std::string(static_cast<std::size_t>(extra(rng)), '\n');
    for (const auto& p : paras) {
      messy += p + "  " + std::string(static_cast<std::size_t>(2 + extra(rng)), '\n');
    }
    EXPECT_EQ(join_trajectory(segment_trajectory(messy)), normalize_text(messy));
    EXPECT_EQ(segment_trajectory(messy), t);
  }
}

// Property: replacing segment i leaves every other segment untouched.
TEST(CorePropertyTest, ReplaceChangesExactlyOneSegment) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 200; ++iter) {
    Texts paras;
    const auto n = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    for (std::size_t i = 0; i < n; ++i) paras.push_back(testing::random_paragraph(rng));
    const Trajectory t(paras);
    const auto i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const auto out = replace_segment(t, i, testing::random_paragraph(rng));
    ASSERT_EQ(out.size(), t.size());
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) EXPECT_EQ(out[j], t[j]);
    }
  }
}

TEST(SourceTest, RoundTrip) {
  for (auto s : {Source::kWritingPlatform, Source::kPublicDomain, Source::kPublicDataset,
                 Source::kFixture}) {
    EXPECT_EQ(source_from_string(to_string(s)), s);
  }
  EXPECT_THROW(source_from_string("reddit"), Error);
}

TEST(PairTest, Validate) {
  QuerySolutionPair p{"id", "q", "s", "other", Source::kFixture};
  EXPECT_NO_THROW(p.validate());
  p.solution = "  ";
  EXPECT_THROW(p.validate(), Error);
}

}  // namespace
}  // namespace reer
