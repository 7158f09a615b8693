// SPDX-License-Identifier: Apache-2.0
#include "reer/text.hpp"

#include <algorithm>

namespace reer::text {

std::u32string decode_utf8(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= bytes.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(bytes[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
      } else {
        cp = (cp << 6) | (b & 0x3F);
      }
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(std::u32string_view code_points) {
  std::string out;
  out.reserve(code_points.size());
  for (char32_t cp : code_points) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x110000) {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out += "\xEF\xBF\xBD";
    }
  }
  return out;
}

std::size_t code_point_count(std::string_view bytes) {
  return code_point_offset(bytes, bytes.size());
}

std::size_t code_point_offset(std::string_view bytes, std::size_t byte_offset) {
  // Counting lead bytes matches decode_utf8 for valid input.
  std::size_t n = 0;
  const std::size_t end = std::min(byte_offset, bytes.size());
  for (std::size_t i = 0; i < end; ++i) {
    if ((static_cast<unsigned char>(bytes[i]) & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() && is_space(s[b])) ++b;
  return trim_right(s.substr(b));
}

std::string_view trim_right(std::string_view s) {
  std::size_t e = s.size();
  while (e > 0 && is_space(s[e - 1])) --e;
  return s.substr(0, e);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::size_t word_count(std::string_view s) { return split_whitespace(s).size(); }

std::vector<std::string> content_words(std::string_view s) {
  auto is_punct = [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && !is_word_byte(c) && !is_space(c);
  };
  std::vector<std::string> out;
  for (auto w : split_whitespace(s)) {
    std::size_t b = 0;
    std::size_t e = w.size();
    while (b < e && is_punct(w[b])) ++b;
    while (e > b && is_punct(w[e - 1])) --e;
    if (e > b) out.push_back(ascii_lower(w.substr(b, e - b)));
  }
  return out;
}

PatternSet::PatternSet(std::vector<std::string> patterns) : patterns_(std::move(patterns)) {
  tokens_.reserve(patterns_.size());
  for (const auto& p : patterns_) {
    std::vector<std::string> toks;
    for (auto t : split_whitespace(p)) toks.push_back(ascii_lower(t));
    tokens_.push_back(std::move(toks));
  }
}

bool PatternSet::match_at(std::size_t pattern, std::string_view text, std::size_t pos,
                          std::size_t* end) const {
  const auto& toks = tokens_[pattern];
  if (toks.empty()) return false;
  if (pos > 0 && is_word_byte(text[pos - 1]) && is_word_byte(toks.front().front())) return false;
  std::size_t i = pos;
  for (std::size_t k = 0; k < toks.size(); ++k) {
    if (k > 0) {
      const std::size_t ws = i;
      while (i < text.size() && is_space(text[i])) ++i;
      if (i == ws) return false;
    }
    const auto& t = toks[k];
    if (i + t.size() > text.size()) return false;
    for (std::size_t c = 0; c < t.size(); ++c) {
      char ch = text[i + c];
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
      if (ch != t[c]) return false;
    }
    i += t.size();
  }
  if (i < text.size() && is_word_byte(text[i]) && is_word_byte(toks.back().back())) return false;
  *end = i;
  return true;
}

std::vector<PatternMatch> PatternSet::find_all(std::string_view text) const {
  std::vector<PatternMatch> out;
  for (std::size_t p = 0; p < tokens_.size(); ++p) {
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = 0;
      if (match_at(p, text, pos, &end)) {
        out.push_back(PatternMatch{p, pos, end});
        pos = end;
      } else {
        ++pos;
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const PatternMatch& a, const PatternMatch& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.pattern < b.pattern;
  });
  return out;
}

std::vector<std::size_t> PatternSet::count(std::string_view text) const {
  std::vector<std::size_t> counts(patterns_.size(), 0);
  for (const auto& m : find_all(text)) ++counts[m.pattern];
  return counts;
}

std::vector<std::string> parse_line_list(std::string_view content) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = trim(content.substr(start, end - start));
    if (!line.empty() && line.front() != '#') out.emplace_back(line);
    start = end + 1;
  }
  return out;
}

}  // namespace reer::text
