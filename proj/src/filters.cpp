// SPDX-License-Identifier: Apache-2.0
#include "reer/filters.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "reer/errors.hpp"

namespace reer {

using nlohmann::json;

std::string_view to_string(FilterId id) {
  return id == FilterId::kEndOfThinking ? "end_of_thinking" : "repetition";
}

FilterId filter_id_from_string(std::string_view name) {
  if (name == "end_of_thinking") return FilterId::kEndOfThinking;
  if (name == "repetition") return FilterId::kRepetition;
  throw Error(ErrorCode::kInvalidArgument, "unknown filter '" + std::string(name) + "'");
}

json FilterVerdict::to_json() const {
  json details_json = json::array();
  for (const auto& d : details) details_json.push_back(json::array({d.item, d.position}));
  return json{{"filter_id", to_string(filter_id)},
              {"passed", passed},
              {"score", score},
              {"threshold", threshold},
              {"details", std::move(details_json)}};
}

FilterVerdict FilterVerdict::from_json(const json& j) {
  FilterVerdict v;
  v.filter_id = filter_id_from_string(j.at("filter_id").get<std::string>());
  v.passed = j.at("passed").get<bool>();
  v.score = j.at("score").get<double>();
  v.threshold = j.at("threshold").get<double>();
  for (const auto& d : j.at("details")) {
    v.details.push_back(FilterDetail{d.at(0).get<std::string>(), d.at(1).get<std::size_t>()});
  }
  return v;
}

FilterVerdict end_of_thinking_filter(std::string_view text, const text::PatternSet& patterns,
                                     double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tail_fraction must be in (0, 1)");
  }
  if (patterns.size() == 0) throw Error(ErrorCode::kInvalidArgument, "pattern list is empty");
  FilterVerdict v;
  v.filter_id = FilterId::kEndOfThinking;
  v.threshold = 0.0;
  const std::size_t n = text::code_point_count(text);
  if (n == 0) return v;
  // The epsilon absorbs products like 0.1 * 30 = 3.0000000000000004.
  const auto tail = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n) - 1e-9));
  const std::size_t tail_start = n - std::min(tail, n);
  for (const auto& m : patterns.find_all(text)) {
    const std::size_t at = text::code_point_offset(text, m.begin);
    if (at >= tail_start) {
      v.details.push_back(FilterDetail{std::string(text.substr(m.begin, m.end - m.begin)), at});
    }
  }
  v.score = static_cast<double>(v.details.size());
  v.passed = v.details.empty();
  return v;
}

FilterVerdict repetition_filter(std::string_view text, std::size_t n, std::size_t top_k,
                                double threshold) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n-gram size must be >= 1");
  if (top_k < 1) throw Error(ErrorCode::kInvalidArgument, "top_k must be >= 1");
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "repetition threshold must be in (0, 1]");
  }
  FilterVerdict v;
  v.filter_id = FilterId::kRepetition;
  v.threshold = threshold;
  std::vector<std::string> words;
  for (auto w : text::split_whitespace(text)) words.push_back(text::ascii_lower(w));
  if (words.size() < n) return v;

  std::map<std::string, std::size_t> counts;
  const std::size_t total = words.size() - n + 1;
  for (std::size_t i = 0; i < total; ++i) {
    std::string gram = words[i];
    for (std::size_t k = 1; k < n; ++k) gram += ' ' + words[i + k];
    ++counts[gram];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::size_t top = 0;
  for (std::size_t i = 0; i < std::min(top_k, ranked.size()); ++i) {
    top += ranked[i].second;
    v.details.push_back(FilterDetail{ranked[i].first, ranked[i].second});
  }
  v.score = static_cast<double>(top) / static_cast<double>(total);
  v.passed = v.score <= threshold;
  return v;
}

void FilterConfig::validate() const {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
    throw Error(ErrorCode::kConfig, "filters.tail_fraction must be in (0, 1)");
  }
  if (ngram < 1) throw Error(ErrorCode::kConfig, "filters.ngram must be >= 1");
  if (top_k < 1) throw Error(ErrorCode::kConfig, "filters.top_k must be >= 1");
  if (!(repetition_threshold > 0.0 && repetition_threshold <= 1.0)) {
    throw Error(ErrorCode::kConfig, "filters.repetition_threshold must be in (0, 1]");
  }
}

json FilterConfig::to_json() const {
  return json{{"tail_fraction", tail_fraction},
              {"ngram", ngram},
              {"top_k", top_k},
              {"repetition_threshold", repetition_threshold}};
}

FilterConfig FilterConfig::from_json(const json& j) {
  FilterConfig c;
  c.tail_fraction = j.value("tail_fraction", c.tail_fraction);
  c.ngram = j.value("ngram", c.ngram);
  c.top_k = j.value("top_k", c.top_k);
  c.repetition_threshold = j.value("repetition_threshold", c.repetition_threshold);
  c.validate();
  return c;
}

std::vector<FilterVerdict> apply_filters(std::string_view trajectory_text,
                                         const text::PatternSet& patterns,
                                         const FilterConfig& config) {
  return {end_of_thinking_filter(trajectory_text, patterns, config.tail_fraction),
          repetition_filter(trajectory_text, config.ngram, config.top_k,
                            config.repetition_threshold)};
}

}  // namespace reer
