// SPDX-License-Identifier: Apache-2.0
// Deliberately naive reference implementations. They recount everything from
// scratch with plain string comparisons so they share no code with the
// library paths they check.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace reer::oracle {

/// Add-one character n-gram logprobs of each solution character, ASCII only.
/// `extra` is counted as a second, separate corpus (its windows never span
/// the join), which is what in-context scoring adds.
inline std::vector<double> ngram_logprobs(const std::string& corpus, int order,
                                          const std::string& prompt, const std::string& solution,
                                          const std::string& extra = "",
                                          bool reserve_unknown = false) {
  std::set<char> alphabet(corpus.begin(), corpus.end());
  const double V = static_cast<double>(alphabet.size() + (reserve_unknown ? 1 : 0));
  const std::size_t m = static_cast<std::size_t>(order - 1);
  // With the unknown symbol reserved, every out-of-alphabet byte becomes \x01
  // (never part of a test alphabet); without it such windows are skipped.
  auto fold = [&](std::string s) {
    if (reserve_unknown) {
      for (char& c : s) {
        if (!alphabet.count(c)) c = '\x01';
      }
    }
    return s;
  };
  auto known = [&](const std::string& win) {
    for (char c : win) {
      if (!alphabet.count(c) && c != '\x01') return false;
    }
    return true;
  };
  const std::string full = fold(prompt + solution);
  const std::string sources[2] = {corpus, fold(extra)};
  std::vector<double> out;
  for (std::size_t t = prompt.size(); t < full.size(); ++t) {
    if (t < m) {
      out.push_back(std::log(1.0 / V));
      continue;
    }
    const std::string h = full.substr(t - m, m);
    const std::string w = h + full[t];
    double ctx = 0, hit = 0;
    for (const auto& src : sources) {
      if (src.size() < static_cast<std::size_t>(order)) continue;
      for (std::size_t i = 0; i + order <= src.size(); ++i) {
        const std::string win = src.substr(i, order);
        if (!known(win)) continue;
        if (win.compare(0, m, h) == 0) ++ctx;
        if (win == w) ++hit;
      }
    }
    out.push_back(std::log((hit + 1.0) / (ctx + V)));
  }
  return out;
}

inline double ppl_direct(const std::vector<double>& lp) {
  double s = 0;
  for (double x : lp) s += x;
  return std::exp(-s / static_cast<double>(lp.size()));
}

/// Top-k share of word n-grams, by building the full map from scratch.
inline double repetition_share(const std::string& text, std::size_t n, std::size_t k) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) words.push_back(cur);
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!cur.empty()) words.push_back(cur);
  if (words.size() < n) return 0.0;
  std::map<std::vector<std::string>, std::size_t> grams;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    ++grams[std::vector<std::string>(words.begin() + i, words.begin() + i + n)];
  }
  std::vector<std::size_t> counts;
  for (const auto& [g, c] : grams) counts.push_back(c);
  std::sort(counts.rbegin(), counts.rend());
  std::size_t top = 0;
  for (std::size_t i = 0; i < std::min(k, counts.size()); ++i) top += counts[i];
  return static_cast<double>(top) / static_cast<double>(words.size() - n + 1);
}

/// Byte offsets where `pattern` matches, via std::regex with ASCII word
/// boundaries.
inline std::vector<std::size_t> regex_positions(const std::string& text, const std::string& pattern) {
  std::string re = "(^|[^A-Za-z0-9_])(";
  for (char c : pattern) {
    if (c == ' ') {
      re += "\\s+";
    } else if (std::isalnum(static_cast<unsigned char>(c))) {
      re += c;
    } else {
      re += '\\';
      re += c;
    }
  }
  re += ")(?=$|[^A-Za-z0-9_])";
  const std::regex r(re, std::regex::icase | std::regex::ECMAScript);
  std::vector<std::size_t> out;
  auto begin = text.cbegin();
  std::smatch m;
  auto flags = std::regex_constants::match_default;
  while (std::regex_search(begin, text.cend(), m, r, flags)) {
    flags = std::regex_constants::match_prev_avail;
    out.push_back(static_cast<std::size_t>(m[2].first - text.cbegin()));
    begin = m[2].second;
  }
  return out;
}

inline std::size_t regex_count(const std::string& text, const std::string& pattern) {
  return regex_positions(text, pattern).size();
}

/// Content words shared verbatim over more than `max_span` consecutive words.
inline bool shares_span(const std::string& a, const std::string& b, std::size_t max_span) {
  auto words = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
      std::size_t i = 0, j = cur.size();
      while (i < j && std::ispunct(static_cast<unsigned char>(cur[i]))) ++i;
      while (j > i && std::ispunct(static_cast<unsigned char>(cur[j - 1]))) --j;
      if (j > i) out.push_back(cur.substr(i, j - i));
      cur.clear();
    };
    for (char c : s) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        flush();
      } else {
        cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
    }
    flush();
    return out;
  };
  const auto wa = words(a), wb = words(b);
  const std::size_t L = max_span + 1;
  for (std::size_t i = 0; i + L <= wa.size(); ++i) {
    for (std::size_t j = 0; j + L <= wb.size(); ++j) {
      if (std::equal(wa.begin() + i, wa.begin() + i + L, wb.begin() + j)) return true;
    }
  }
  return false;
}

}  // namespace reer::oracle
