// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace reer {

enum class PlaceholderStyle {
  kBraces,  // {name}
  kDollar,  // $NAME$
};

/// A versioned text asset (prompt template or word list). The content is
/// kept byte-exact; `sha256` identifies it in provenance records.
struct PromptAsset {
  std::string name;
  std::string version;
  std::string content;
  std::string sha256;
  PlaceholderStyle style = PlaceholderStyle::kBraces;

  /// "name@version"
  std::string id() const;
  /// "name@version#<first 12 hex digits of sha256>"
  std::string provenance() const;

  /// Placeholder names in order of first appearance.
  std::vector<std::string> placeholders() const;

  /// Single-pass substitution. Every placeholder in the template needs a
  /// value and every supplied value must have a slot; otherwise throws
  /// kTemplateRender.
  std::string render(const std::map<std::string, std::string>& values) const;
};

namespace assets {
inline constexpr std::string_view kInitialThinking = "initial_thinking";
inline constexpr std::string_view kSegmentEdit = "segment_edit";
inline constexpr std::string_view kStandardInference = "standard_inference";
inline constexpr std::string_view kScoring = "scoring";
inline constexpr std::string_view kQualityRating = "quality_rating";
inline constexpr std::string_view kPatterns = "patterns";
inline constexpr std::string_view kCategories = "categories";

/// Every asset the pipeline needs, each with the placeholders it must carry.
const std::vector<std::pair<std::string_view, std::vector<std::string>>>& required();
}  // namespace assets

/// Holds the newest version of each named asset.
class AssetStore {
 public:
  /// The assets compiled into the library.
  static const AssetStore& builtin();

  /// Loads `<dir>/prompts/*.vN.txt` and `<dir>/*.vN.txt`. Throws kMissingAsset
  /// listing every required asset that is absent, or kTemplateRender when an
  /// asset lacks one of its required placeholders.
  static AssetStore load_directory(const std::filesystem::path& dir);

  /// Builds a store from (relative path, content) entries.
  static AssetStore from_entries(const std::vector<std::pair<std::string, std::string>>& entries);

  const PromptAsset& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  /// name -> provenance string, for every asset in the store.
  std::map<std::string, std::string> versions() const;

  std::vector<std::string> patterns() const;
  std::vector<std::string> categories() const;

  /// Throws if a required asset or placeholder is missing.
  void validate() const;

 private:
  std::map<std::string, PromptAsset, std::less<>> assets_;
};

namespace detail {
struct EmbeddedAsset {
  std::string_view path;
  std::string_view content;
};
const std::vector<EmbeddedAsset>& embedded_assets();
}  // namespace detail

}  // namespace reer
