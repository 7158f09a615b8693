// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "reer/core.hpp"
#include "reer/filters.hpp"
#include "reer/search.hpp"
#include "reer/templates.hpp"

namespace reer {

// ---------------------------------------------------------------------------
// Ingestion

struct IngestOptions {
  /// Strict mode aborts on the first bad line; lenient mode skips and counts.
  bool strict = true;
  /// Allowed categories; empty accepts any label.
  std::vector<std::string> categories;
};

struct IngestResult {
  std::vector<QuerySolutionPair> pairs;
  std::vector<std::size_t> line_numbers;  // 1-based, parallel to pairs
  std::size_t skipped = 0;
  std::vector<std::string> diagnostics;
};

/// Reads one JSON object per line with {id, query, solution, category,
/// source}. Blank lines are ignored. Errors name the offending line.
IngestResult ingest_pairs(std::istream& in, const IngestOptions& options = {});
IngestResult ingest_pairs(const std::filesystem::path& path, const IngestOptions& options = {});

nlohmann::json pair_to_json(const QuerySolutionPair& pair);

std::vector<SynthesisRecord> read_synthesis_records(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Training records

struct TrainingProvenance {
  double initial_ppl = 0.0;
  double final_ppl = 0.0;
  std::size_t iterations = 0;
  std::size_t initial_words = 0;
  std::size_t final_words = 0;
  std::vector<FilterVerdict> filter_verdicts;
  std::map<std::string, std::string> template_versions;
};

struct TrainingRecord {
  static constexpr int kSchemaVersion = 1;

  std::string id;
  std::string query;
  std::string think;
  std::string answer;
  std::string category;
  std::string origin = "synthetic";  // or "external"
  std::optional<TrainingProvenance> provenance;

  nlohmann::json to_json(const AssetStore& assets = AssetStore::builtin()) const;
  static TrainingRecord from_json(const nlohmann::json& j);
};

struct FormattedParts {
  std::string preamble;
  std::string think;
  std::string answer;
};

/// preamble + "<think>\n" + think + "\n</think>\n\n<answer>\n" + answer +
/// "\n</answer>". The preamble is the standard-inference instruction rendered
/// with the query.
std::string format_training_text(const TrainingRecord& record,
                                 const AssetStore& assets = AssetStore::builtin());
FormattedParts parse_training_text(std::string_view text);

struct AssembledRecord {
  TrainingRecord record;
  std::string text;
};

/// Builds the fine-tuning record for a search result. Throws kFilterRejected
/// if any attached verdict failed and kInvalidArgument for empty think/answer
/// or a pair that does not match the record.
AssembledRecord assemble_training_record(const SynthesisRecord& record,
                                         const QuerySolutionPair& pair,
                                         const AssetStore& assets = AssetStore::builtin());

// ---------------------------------------------------------------------------
// Mixing

struct MixTarget {
  std::size_t synthetic = 0;
  std::size_t external = 0;

  /// Largest counts with the given proportions that fit the pools. A zero
  /// weight excludes that source.
  static MixTarget from_ratio(double synthetic_weight, double external_weight,
                              std::size_t synthetic_available, std::size_t external_available);
};

struct MixResult {
  std::vector<TrainingRecord> records;
  std::size_t synthetic = 0;
  std::size_t external = 0;
};

/// Draws the requested number of records from each pool (seeded, without
/// replacement) and interleaves them with a seeded shuffle. Strict mode
/// throws kInsufficientRecords when a pool is too small; otherwise the
/// request is clamped.
MixResult mix_datasets(std::span<const TrainingRecord> synthetic,
                       std::span<const TrainingRecord> external, const MixTarget& target,
                       std::uint64_t seed, bool strict = true);

/// Platform-independent Fisher-Yates over mt19937_64.
void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Statistics

struct StatsRow {
  std::string id;
  std::string category;
  double initial_ppl = 0.0;
  double final_ppl = 0.0;
  std::size_t initial_words = 0;
  std::size_t final_words = 0;
  std::string final_text;
};

StatsRow stats_row(const SynthesisRecord& record);
/// Requires provenance.
StatsRow stats_row(const TrainingRecord& record);

/// Bins are [edges[i], edges[i+1]); the last bin is open-ended.
struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;

  static Histogram build(std::vector<double> edges, std::span<const double> values);
};

/// Fixed bin edges.
const std::vector<double>& ppl_bin_edges();
const std::vector<double>& word_bin_edges();

struct StatsReport {
  static constexpr int kSchemaVersion = 1;

  std::size_t record_count = 0;
  double mean_ppl_before = 0.0;
  double mean_ppl_after = 0.0;
  double mean_ppl_delta = 0.0;
  double improvement_fraction = 0.0;
  double mean_words_before = 0.0;
  double mean_words_after = 0.0;
  std::vector<double> ppl_deltas;  // before - after, input order
  Histogram ppl_before;
  Histogram ppl_after;
  Histogram words_before;
  Histogram words_after;
  std::map<std::string, std::size_t> category_counts;
  std::vector<std::pair<std::string, std::size_t>> pattern_frequencies;

  nlohmann::json to_json() const;
  /// Columns: section,key,value. Summary rows first, then histograms,
  /// categories and patterns.
  std::string to_csv() const;
};

StatsReport compute_stats(std::span<const StatsRow> rows, const std::vector<std::string>& patterns);

/// Number of texts containing each pattern at least once.
std::vector<std::pair<std::string, std::size_t>> pattern_frequencies(
    std::span<const std::string> texts, const std::vector<std::string>& patterns);

// ---------------------------------------------------------------------------
// Quality judge

struct DimensionScore {
  int score = 0;
  std::string justification;
};

struct QualityReport {
  DimensionScore understanding;
  DimensionScore structure;
  DimensionScore depth;
  DimensionScore clarity;
  DimensionScore grounding;
  std::string overall_summary;
};

/// Renders the rating prompt with $INST$ and $RESPONSE$ substituted.
std::string format_quality_prompt(std::string_view query, std::string_view response,
                                  const AssetStore& assets = AssetStore::builtin());

/// Extracts the evaluationReport JSON (fenced or bare) from a judge reply.
/// Quality scores must be 1-5; the grounding severity score 0-5. Throws
/// kSchema naming the missing field, kOutOfRange for bad scores.
QualityReport parse_quality_report(std::string_view reply);

// ---------------------------------------------------------------------------
// JSONL helpers

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Writes lines atomically (temp file + rename).
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace reer
