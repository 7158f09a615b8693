// SPDX-License-Identifier: Apache-2.0
#include "reer/core.hpp"

#include <string>

#include "reer/errors.hpp"
#include "reer/text.hpp"

namespace reer {
namespace {

// Lines with CR stripped and trailing whitespace trimmed.
std::vector<std::string_view> clean_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text::trim_right(text.substr(start, end - start)));
    start = end + 1;
  }
  return lines;
}

std::vector<std::string> paragraphs(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (auto line : clean_lines(text)) {
    if (line.empty()) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (!current.empty()) current += '\n';
    current += line;
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<std::string> lines_only(std::string_view text) {
  std::vector<std::string> out;
  for (auto line : clean_lines(text)) {
    if (!line.empty()) out.emplace_back(line);
  }
  return out;
}

bool is_single_paragraph(const std::string& text) {
  auto parts = paragraphs(text);
  return parts.size() == 1 && parts.front() == text;
}

}  // namespace

std::string_view to_string(Source source) {
  switch (source) {
    case Source::kWritingPlatform: return "writing_platform";
    case Source::kPublicDomain: return "public_domain";
    case Source::kPublicDataset: return "public_dataset";
    case Source::kFixture: return "fixture";
  }
  return "fixture";
}

Source source_from_string(std::string_view name) {
  if (name == "writing_platform") return Source::kWritingPlatform;
  if (name == "public_domain") return Source::kPublicDomain;
  if (name == "public_dataset") return Source::kPublicDataset;
  if (name == "fixture") return Source::kFixture;
  throw Error(ErrorCode::kInvalidArgument, "unknown source '" + std::string(name) + "'");
}

void QuerySolutionPair::validate() const {
  if (id.empty()) throw Error(ErrorCode::kInvalidArgument, "pair id is empty");
  if (text::trim(query).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "pair '" + id + "' has an empty query");
  }
  if (text::trim(solution).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "pair '" + id + "' has an empty solution");
  }
}

Trajectory::Trajectory(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorCode::kEmptyInput, "trajectory needs at least one segment");
  segments_.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (!is_single_paragraph(texts[i])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "segment " + std::to_string(i) + " is empty or not a single normalized paragraph");
    }
    segments_.push_back(Segment{i, texts[i]});
  }
}

const Segment& Trajectory::at(std::size_t i) const {
  if (i >= segments_.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "segment index " + std::to_string(i) +
                                                 " out of range for " +
                                                 std::to_string(segments_.size()) + " segments");
  }
  return segments_[i];
}

std::vector<std::string> Trajectory::texts() const {
  std::vector<std::string> out;
  out.reserve(segments_.size());
  for (const auto& s : segments_) out.push_back(s.text);
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  for (const auto& p : paragraphs(text)) {
    if (!out.empty()) out += "\n\n";
    out += p;
  }
  return out;
}

Trajectory segment_trajectory(std::string_view text, SegmentationPolicy policy) {
  if (text::trim(text).empty()) {
    throw Error(ErrorCode::kEmptyInput, "cannot segment whitespace-only text");
  }
  return Trajectory(policy == SegmentationPolicy::kParagraph ? paragraphs(text) : lines_only(text));
}

std::string join_trajectory(const Trajectory& trajectory) {
  std::string out;
  for (const auto& s : trajectory.segments()) {
    if (!out.empty()) out += "\n\n";
    out += s.text;
  }
  return out;
}

Trajectory replace_segment(const Trajectory& trajectory, std::size_t index, std::string_view text) {
  trajectory.at(index);
  if (text::trim(text).empty()) {
    throw Error(ErrorCode::kEmptyReplacement, "replacement for segment " + std::to_string(index) +
                                                  " is empty");
  }
  auto texts = trajectory.texts();
  texts[index] = std::string(text);
  return Trajectory(texts);
}

std::string to_single_paragraph(std::string_view text) {
  std::string out;
  for (auto line : clean_lines(text)) {
    if (line.empty()) continue;
    if (!out.empty()) out += '\n';
    out += line;
  }
  return out;
}

}  // namespace reer
