// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace reer::text {

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view code_points);

/// Number of code points in a UTF-8 string.
std::size_t code_point_count(std::string_view bytes);

/// Code point offset of the byte at `byte_offset`.
std::size_t code_point_offset(std::string_view bytes, std::size_t byte_offset);

std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);
std::string ascii_lower(std::string_view s);

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// ASCII alphanumerics, underscore, and any non-ASCII byte count as word
/// characters for boundary checks.
inline bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') ||
         (u >= 'A' && u <= 'Z') || u == '_';
}

std::vector<std::string_view> split_whitespace(std::string_view s);
std::size_t word_count(std::string_view s);

/// Lowercased whitespace tokens with leading/trailing ASCII punctuation
/// removed; tokens that become empty are dropped.
std::vector<std::string> content_words(std::string_view s);

struct PatternMatch {
  std::size_t pattern = 0;  // index into the pattern list
  std::size_t begin = 0;    // byte offsets into the searched text
  std::size_t end = 0;
};

/// Case-insensitive, word-boundary phrase matcher. Whitespace inside a
/// pattern matches any non-empty whitespace run in the text. Occurrences of
/// one pattern never overlap each other; different patterns may overlap
/// ("but wait" and "wait").
class PatternSet {
 public:
  explicit PatternSet(std::vector<std::string> patterns);

  const std::vector<std::string>& patterns() const noexcept { return patterns_; }
  std::size_t size() const noexcept { return patterns_.size(); }

  /// All matches ordered by (begin, pattern).
  std::vector<PatternMatch> find_all(std::string_view text) const;
  std::vector<std::size_t> count(std::string_view text) const;

 private:
  bool match_at(std::size_t pattern, std::string_view text, std::size_t pos,
                std::size_t* end) const;

  std::vector<std::string> patterns_;
  std::vector<std::vector<std::string>> tokens_;
};

/// Parses a one-pattern-per-line asset. Blank lines and `#` comments are
/// skipped.
std::vector<std::string> parse_line_list(std::string_view content);

}  // namespace reer::text
