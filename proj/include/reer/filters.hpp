// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reer/text.hpp"

namespace reer {

enum class FilterId { kEndOfThinking, kRepetition };

std::string_view to_string(FilterId id);
FilterId filter_id_from_string(std::string_view name);

struct FilterDetail {
  std::string item;
  std::size_t position = 0;  // code point offset, or occurrence count for n-grams
};

struct FilterVerdict {
  FilterId filter_id = FilterId::kEndOfThinking;
  bool passed = true;
  double score = 0.0;
  double threshold = 0.0;
  std::vector<FilterDetail> details;

  nlohmann::json to_json() const;
  static FilterVerdict from_json(const nlohmann::json& j);
};

/// Fails when any pattern match starts inside the last
/// ceil(tail_fraction * N) characters of the text (N in code points). The
/// score is the number of such matches; the threshold is 0.
FilterVerdict end_of_thinking_filter(std::string_view text, const text::PatternSet& patterns,
                                     double tail_fraction = 0.10);

/// Share of all word n-grams taken by the top_k most frequent ones. Words
/// are lowercased whitespace tokens. Fails when the share exceeds
/// `threshold`. Texts with fewer than n words score 0.
FilterVerdict repetition_filter(std::string_view text, std::size_t n = 3, std::size_t top_k = 3,
                                double threshold = 0.15);

struct FilterConfig {
  double tail_fraction = 0.10;
  std::size_t ngram = 3;
  std::size_t top_k = 3;
  double repetition_threshold = 0.15;

  void validate() const;
  nlohmann::json to_json() const;
  static FilterConfig from_json(const nlohmann::json& j);
};

/// Both filters, end-of-thinking first.
std::vector<FilterVerdict> apply_filters(std::string_view trajectory_text,
                                         const text::PatternSet& patterns,
                                         const FilterConfig& config = {});

inline bool all_passed(const std::vector<FilterVerdict>& verdicts) {
  for (const auto& v : verdicts) {
    if (!v.passed) return false;
  }
  return true;
}

}  // namespace reer
