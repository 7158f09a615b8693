// SPDX-License-Identifier: Apache-2.0
#include "reer/templates.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "reer/errors.hpp"
#include "reer/hashing.hpp"
#include "reer/text.hpp"

namespace reer {
namespace {

bool is_brace_name_char(char c, bool first) {
  return (c >= 'a' && c <= 'z') || c == '_' || (!first && c >= '0' && c <= '9');
}

bool is_dollar_name_char(char c) { return (c >= 'A' && c <= 'Z') || c == '_'; }

// Calls fn(literal) and fn_slot(name) for each piece of the template.
template <typename Literal, typename Slot>
void scan(const std::string& content, PlaceholderStyle style, Literal&& literal, Slot&& slot) {
  std::size_t i = 0;
  std::size_t lit_start = 0;
  const char open = style == PlaceholderStyle::kBraces ? '{' : '$';
  const char close = style == PlaceholderStyle::kBraces ? '}' : '$';
  while (i < content.size()) {
    if (content[i] != open) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < content.size() &&
           (style == PlaceholderStyle::kBraces ? is_brace_name_char(content[j], j == i + 1)
                                               : is_dollar_name_char(content[j]))) {
      ++j;
    }
    if (j > i + 1 && j < content.size() && content[j] == close) {
      literal(std::string_view(content).substr(lit_start, i - lit_start));
      slot(content.substr(i + 1, j - i - 1));
      i = j + 1;
      lit_start = i;
    } else {
      ++i;
    }
  }
  literal(std::string_view(content).substr(lit_start));
}

struct ParsedName {
  std::string name;
  std::string version;
  int version_number = 0;
};

std::optional<ParsedName> parse_asset_path(std::string_view rel) {
  auto slash = rel.find_last_of('/');
  std::string_view file = slash == std::string_view::npos ? rel : rel.substr(slash + 1);
  if (file.size() < 4 || file.substr(file.size() - 4) != ".txt") return std::nullopt;
  file.remove_suffix(4);
  auto dot = file.rfind(".v");
  if (dot == std::string_view::npos || dot + 2 >= file.size()) return std::nullopt;
  auto digits = file.substr(dot + 2);
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  return ParsedName{std::string(file.substr(0, dot)), "v" + std::string(digits),
                    std::stoi(std::string(digits))};
}

PlaceholderStyle style_for(std::string_view name) {
  return name == assets::kQualityRating ? PlaceholderStyle::kDollar : PlaceholderStyle::kBraces;
}

}  // namespace

std::string PromptAsset::id() const { return name + "@" + version; }

std::string PromptAsset::provenance() const { return id() + "#" + sha256.substr(0, 12); }

std::vector<std::string> PromptAsset::placeholders() const {
  std::vector<std::string> out;
  scan(content, style, [](std::string_view) {},
       [&](const std::string& n) {
         if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
       });
  return out;
}

std::string PromptAsset::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  std::set<std::string> used;
  std::vector<std::string> missing;
  scan(content, style, [&](std::string_view lit) { out += lit; },
       [&](const std::string& n) {
         auto it = values.find(n);
         if (it == values.end()) {
           missing.push_back(n);
           return;
         }
         used.insert(n);
         out += it->second;
       });
  if (!missing.empty()) {
    throw Error(ErrorCode::kTemplateRender,
                "asset " + id() + ": no value for placeholder '" + missing.front() + "'");
  }
  for (const auto& [k, v] : values) {
    if (!used.count(k)) {
      throw Error(ErrorCode::kTemplateRender,
                  "asset " + id() + ": template has no placeholder '" + k + "'");
    }
  }
  return out;
}

namespace assets {
const std::vector<std::pair<std::string_view, std::vector<std::string>>>& required() {
  static const std::vector<std::pair<std::string_view, std::vector<std::string>>> kRequired = {
      {kInitialThinking, {"query", "solution"}},
      {kSegmentEdit, {"query", "solution", "prefix", "target", "suffix"}},
      {kStandardInference, {"query"}},
      {kScoring, {"query", "trajectory"}},
      {kQualityRating, {"INST", "RESPONSE"}},
      {kPatterns, {}},
      {kCategories, {}},
  };
  return kRequired;
}
}  // namespace assets

const AssetStore& AssetStore::builtin() {
  static const AssetStore store = [] {
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& a : detail::embedded_assets()) {
      entries.emplace_back(std::string(a.path), std::string(a.content));
    }
    auto s = from_entries(entries);
    s.validate();
    return s;
  }();
  return store;
}

AssetStore AssetStore::from_entries(const std::vector<std::pair<std::string, std::string>>& entries) {
  AssetStore store;
  std::map<std::string, int> best;
  for (const auto& [rel, content] : entries) {
    auto parsed = parse_asset_path(rel);
    if (!parsed) continue;
    auto it = best.find(parsed->name);
    if (it != best.end() && it->second >= parsed->version_number) continue;
    best[parsed->name] = parsed->version_number;
    PromptAsset asset;
    asset.name = parsed->name;
    asset.version = parsed->version;
    asset.content = content;
    asset.sha256 = sha256_hex(content);
    asset.style = style_for(asset.name);
    store.assets_[asset.name] = std::move(asset);
  }
  return store;
}

AssetStore AssetStore::load_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kMissingAsset, "asset directory '" + dir.string() + "' does not exist");
  }
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    entries.emplace_back(fs::relative(entry.path(), dir).generic_string(), ss.str());
  }
  std::sort(entries.begin(), entries.end());
  auto store = from_entries(entries);
  store.validate();
  return store;
}

const PromptAsset& AssetStore::get(std::string_view name) const {
  auto it = assets_.find(name);
  if (it == assets_.end()) {
    throw Error(ErrorCode::kMissingAsset, "missing asset '" + std::string(name) + "'");
  }
  return it->second;
}

bool AssetStore::contains(std::string_view name) const { return assets_.find(name) != assets_.end(); }

std::map<std::string, std::string> AssetStore::versions() const {
  std::map<std::string, std::string> out;
  for (const auto& [name, a] : assets_) out[name] = a.provenance();
  return out;
}

std::vector<std::string> AssetStore::patterns() const {
  return text::parse_line_list(get(assets::kPatterns).content);
}

std::vector<std::string> AssetStore::categories() const {
  return text::parse_line_list(get(assets::kCategories).content);
}

void AssetStore::validate() const {
  std::vector<std::string> missing;
  for (const auto& [name, slots] : assets::required()) {
    if (!contains(name)) missing.emplace_back(name);
  }
  if (!missing.empty()) {
    std::string msg = "missing asset(s):";
    for (const auto& m : missing) msg += " " + m;
    throw Error(ErrorCode::kMissingAsset, msg);
  }
  for (const auto& [name, slots] : assets::required()) {
    const auto& asset = get(name);
    auto present = asset.placeholders();
    for (const auto& slot : slots) {
      if (std::find(present.begin(), present.end(), slot) == present.end()) {
        throw Error(ErrorCode::kTemplateRender,
                    "asset " + asset.id() + " lacks required placeholder '" + slot + "'");
      }
    }
  }
}

}  // namespace reer
