// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace reer {

enum class Source { kWritingPlatform, kPublicDomain, kPublicDataset, kFixture };

std::string_view to_string(Source source);
Source source_from_string(std::string_view name);

/// One (query, solution) pair. The solution is the known-good output the
/// search tries to explain.
struct QuerySolutionPair {
  std::string id;
  std::string query;
  std::string solution;
  std::string category;
  Source source = Source::kFixture;

  /// Throws kInvalidArgument when id, query or solution is empty.
  void validate() const;

  bool operator==(const QuerySolutionPair&) const = default;
};

struct Segment {
  std::size_t index = 0;
  std::string text;

  bool operator==(const Segment&) const = default;
};

enum class SegmentationPolicy {
  kParagraph,  // split on blank lines
  kLine,       // split on every newline
};

/// Ordered, non-empty list of reasoning segments. Every segment is a single
/// normalized paragraph, so join/segment round-trips exactly.
class Trajectory {
 public:
  explicit Trajectory(const std::vector<std::string>& texts);

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  std::size_t size() const noexcept { return segments_.size(); }
  const Segment& operator[](std::size_t i) const { return segments_[i]; }
  const Segment& at(std::size_t i) const;

  std::vector<std::string> texts() const;

  bool operator==(const Trajectory&) const = default;

 private:
  std::vector<Segment> segments_;
};

/// Canonical form of a paragraph-structured text: CRLF folded to LF, trailing
/// whitespace trimmed per line, paragraphs separated by exactly one blank line.
std::string normalize_text(std::string_view text);

Trajectory segment_trajectory(std::string_view text,
                              SegmentationPolicy policy = SegmentationPolicy::kParagraph);

std::string join_trajectory(const Trajectory& trajectory);

/// Returns a copy of `trajectory` with segment `index` replaced. The
/// replacement must be a single non-empty paragraph.
Trajectory replace_segment(const Trajectory& trajectory, std::size_t index,
                           std::string_view text);

/// Collapses a free-form text into one paragraph: blank-line runs become a
/// single newline and trailing whitespace is trimmed. Used to coerce
/// generated candidates into valid segments.
std::string to_single_paragraph(std::string_view text);

}  // namespace reer
