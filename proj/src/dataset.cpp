// SPDX-License-Identifier: Apache-2.0
#include "reer/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "reer/errors.hpp"
#include "reer/hashing.hpp"
#include "reer/text.hpp"

namespace reer {

using nlohmann::json;

namespace {

constexpr std::string_view kThinkOpen = "<think>\n";
constexpr std::string_view kSeparator = "\n</think>\n\n<answer>\n";
constexpr std::string_view kAnswerClose = "\n</answer>";

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::string required_string(const json& obj, const char* field) {
  if (!obj.contains(field)) throw Error(ErrorCode::kMalformedRecord, std::string("missing field '") + field + "'");
  if (!obj.at(field).is_string()) {
    throw Error(ErrorCode::kMalformedRecord, std::string("field '") + field + "' is not a string");
  }
  return obj.at(field).get<std::string>();
}

std::string number(double v) { return json(v).dump(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string bin_label(const Histogram& h, std::size_t i) {
  if (i + 1 < h.edges.size()) return number(h.edges[i]) + "-" + number(h.edges[i + 1]);
  return number(h.edges[i]) + "+";
}

json histogram_json(const Histogram& h) { return json{{"edges", h.edges}, {"counts", h.counts}}; }

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

// ---------------------------------------------------------------------------
// Ingestion

json pair_to_json(const QuerySolutionPair& pair) {
  return json{{"id", pair.id},
              {"query", pair.query},
              {"solution", pair.solution},
              {"category", pair.category},
              {"source", to_string(pair.source)}};
}

IngestResult ingest_pairs(std::istream& in, const IngestOptions& options) {
  IngestResult result;
  std::map<std::string, std::size_t> seen;
  const std::set<std::string> allowed(options.categories.begin(), options.categories.end());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kMalformedRecord, std::string("invalid JSON (") + e.what() + ")");
      }
      if (!j.is_object()) throw Error(ErrorCode::kMalformedRecord, "not a JSON object");
      QuerySolutionPair pair;
      pair.id = required_string(j, "id");
      pair.query = required_string(j, "query");
      pair.solution = required_string(j, "solution");
      pair.category = required_string(j, "category");
      pair.source = source_from_string(required_string(j, "source"));
      try {
        pair.validate();
      } catch (const Error& e) {
        throw Error(ErrorCode::kMalformedRecord, e.what());
      }
      if (!allowed.empty() && !allowed.count(pair.category)) {
        throw Error(ErrorCode::kMalformedRecord, "category '" + pair.category + "' is not in the taxonomy");
      }
      if (auto it = seen.find(pair.id); it != seen.end()) {
        throw Error(ErrorCode::kDuplicateId, "duplicate id '" + pair.id + "' (first seen on line " +
                                                 std::to_string(it->second) + ")");
      }
      seen.emplace(pair.id, lineno);
      result.pairs.push_back(std::move(pair));
      result.line_numbers.push_back(lineno);
    } catch (const Error& e) {
      const auto code = e.code() == ErrorCode::kDuplicateId ? e.code() : ErrorCode::kMalformedRecord;
      const std::string msg = line_prefix(lineno) + e.what();
      if (options.strict) throw Error(code, msg);
      ++result.skipped;
      result.diagnostics.push_back(msg);
    }
  }
  return result;
}

IngestResult ingest_pairs(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open pairs file '" + path.string() + "'");
  return ingest_pairs(in, options);
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  path.string() + ":" + std::to_string(lineno) + ": invalid JSON (" + e.what() + ")");
    }
  }
  return out;
}

std::vector<SynthesisRecord> read_synthesis_records(const std::filesystem::path& path) {
  std::vector<SynthesisRecord> out;
  std::size_t i = 0;
  for (const auto& j : read_jsonl(path)) {
    ++i;
    try {
      out.push_back(SynthesisRecord::from_json(j));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ": record " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw Error(ErrorCode::kIo, "write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Training records

json TrainingRecord::to_json(const AssetStore& assets) const {
  json j{{"schema_version", kSchemaVersion},
         {"id", id},
         {"query", query},
         {"think", think},
         {"answer", answer},
         {"category", category},
         {"origin", origin},
         {"text", format_training_text(*this, assets)}};
  if (provenance) {
    json verdicts = json::array();
    for (const auto& v : provenance->filter_verdicts) verdicts.push_back(v.to_json());
    j["provenance"] = json{{"initial_ppl", provenance->initial_ppl},
                           {"final_ppl", provenance->final_ppl},
                           {"iterations", provenance->iterations},
                           {"initial_words", provenance->initial_words},
                           {"final_words", provenance->final_words},
                           {"filter_verdicts", std::move(verdicts)},
                           {"template_versions", provenance->template_versions}};
  } else {
    j["provenance"] = nullptr;
  }
  return j;
}

TrainingRecord TrainingRecord::from_json(const json& j) {
  try {
    if (j.value("schema_version", 0) != kSchemaVersion) {
      throw Error(ErrorCode::kMalformedRecord, "unsupported training record schema_version");
    }
    TrainingRecord r;
    r.id = j.at("id").get<std::string>();
    r.query = j.at("query").get<std::string>();
    r.think = j.at("think").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    r.category = j.value("category", std::string());
    r.origin = j.value("origin", std::string("synthetic"));
    if (j.contains("provenance") && !j.at("provenance").is_null()) {
      const auto& p = j.at("provenance");
      TrainingProvenance prov;
      prov.initial_ppl = p.at("initial_ppl").get<double>();
      prov.final_ppl = p.at("final_ppl").get<double>();
      prov.iterations = p.at("iterations").get<std::size_t>();
      prov.initial_words = p.value("initial_words", std::size_t{0});
      prov.final_words = p.value("final_words", std::size_t{0});
      for (const auto& v : p.value("filter_verdicts", json::array())) {
        prov.filter_verdicts.push_back(FilterVerdict::from_json(v));
      }
      prov.template_versions = p.value("template_versions", std::map<std::string, std::string>{});
      r.provenance = std::move(prov);
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("training record: ") + e.what());
  }
}

std::string format_training_text(const TrainingRecord& record, const AssetStore& assets) {
  if (text::trim(record.think).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "record '" + record.id + "' has an empty think section");
  }
  if (text::trim(record.answer).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "record '" + record.id + "' has an empty answer");
  }
  if (record.think.find(kSeparator) != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "think section contains the answer separator");
  }
  if (record.query.find("\n" + std::string(kThinkOpen)) != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "query contains a think marker line");
  }
  auto preamble = assets.get(assets::kStandardInference).render({{"query", record.query}});
  std::string out = std::move(preamble);
  out += kThinkOpen;
  out += record.think;
  out += kSeparator;
  out += record.answer;
  out += kAnswerClose;
  return out;
}

FormattedParts parse_training_text(std::string_view text) {
  if (text.size() < kAnswerClose.size() ||
      text.substr(text.size() - kAnswerClose.size()) != kAnswerClose) {
    throw Error(ErrorCode::kSchema, "training text does not end with the answer marker");
  }
  std::size_t open = std::string_view::npos;
  if (text.substr(0, kThinkOpen.size()) == kThinkOpen) {
    open = 0;
  } else if (auto p = text.find("\n" + std::string(kThinkOpen)); p != std::string_view::npos) {
    open = p + 1;
  }
  if (open == std::string_view::npos) throw Error(ErrorCode::kSchema, "training text has no think marker");
  const std::size_t think_begin = open + kThinkOpen.size();
  const auto sep = text.find(kSeparator, think_begin);
  if (sep == std::string_view::npos) {
    throw Error(ErrorCode::kSchema, "training text has no answer separator");
  }
  const std::size_t answer_begin = sep + kSeparator.size();
  const std::size_t answer_end = text.size() - kAnswerClose.size();
  if (answer_begin > answer_end) throw Error(ErrorCode::kSchema, "training text answer is truncated");
  return FormattedParts{std::string(text.substr(0, open)),
                        std::string(text.substr(think_begin, sep - think_begin)),
                        std::string(text.substr(answer_begin, answer_end - answer_begin))};
}

AssembledRecord assemble_training_record(const SynthesisRecord& record,
                                         const QuerySolutionPair& pair, const AssetStore& assets) {
  if (record.pair_id != pair.id) {
    throw Error(ErrorCode::kInvalidArgument,
                "record '" + record.pair_id + "' does not belong to pair '" + pair.id + "'");
  }
  if (record.filter_verdicts.empty()) {
    throw Error(ErrorCode::kFilterRejected, "record '" + record.pair_id + "' has not been filtered");
  }
  for (const auto& v : record.filter_verdicts) {
    if (!v.passed) {
      throw Error(ErrorCode::kFilterRejected, "record '" + record.pair_id + "' failed the " +
                                                  std::string(to_string(v.filter_id)) + " filter");
    }
  }
  AssembledRecord out;
  auto& r = out.record;
  r.id = pair.id;
  r.query = pair.query;
  r.think = join_trajectory(record.final_trajectory);
  r.answer = pair.solution;
  r.category = pair.category;
  r.origin = "synthetic";
  TrainingProvenance prov;
  prov.initial_ppl = record.initial_ppl;
  prov.final_ppl = record.final_ppl;
  prov.iterations = record.iterations;
  prov.initial_words = text::word_count(join_trajectory(record.initial_trajectory));
  prov.final_words = text::word_count(r.think);
  prov.filter_verdicts = record.filter_verdicts;
  prov.template_versions = record.template_versions;
  r.provenance = std::move(prov);
  out.text = format_training_text(r, assets);
  return out;
}

// ---------------------------------------------------------------------------
// Mixing

void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

MixTarget MixTarget::from_ratio(double synthetic_weight, double external_weight,
                                std::size_t synthetic_available, std::size_t external_available) {
  if (synthetic_weight < 0 || external_weight < 0 || (synthetic_weight == 0 && external_weight == 0)) {
    throw Error(ErrorCode::kInvalidArgument, "mix ratio weights must be >= 0 and not both zero");
  }
  if (external_weight == 0) return {synthetic_available, 0};
  if (synthetic_weight == 0) return {0, external_available};
  const double scale = std::min(static_cast<double>(synthetic_available) / synthetic_weight,
                                static_cast<double>(external_available) / external_weight);
  return {static_cast<std::size_t>(std::floor(scale * synthetic_weight)),
          static_cast<std::size_t>(std::floor(scale * external_weight))};
}

MixResult mix_datasets(std::span<const TrainingRecord> synthetic,
                       std::span<const TrainingRecord> external, const MixTarget& target,
                       std::uint64_t seed, bool strict) {
  if (strict && (target.synthetic > synthetic.size() || target.external > external.size())) {
    throw Error(ErrorCode::kInsufficientRecords,
                "requested " + std::to_string(target.synthetic) + " synthetic / " +
                    std::to_string(target.external) + " external records, have " +
                    std::to_string(synthetic.size()) + " / " + std::to_string(external.size()));
  }
  const std::size_t ns = std::min(target.synthetic, synthetic.size());
  const std::size_t ne = std::min(target.external, external.size());

  auto draw = [](std::size_t pool, std::size_t count, std::uint64_t s) {
    std::vector<std::size_t> idx(pool);
    for (std::size_t i = 0; i < pool; ++i) idx[i] = i;
    seeded_shuffle(idx, s);
    idx.resize(count);
    return idx;
  };
  const auto si = draw(synthetic.size(), ns, mix_seed(seed, 1));
  const auto ei = draw(external.size(), ne, mix_seed(seed, 2));

  std::vector<std::size_t> order(ns + ne);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  seeded_shuffle(order, mix_seed(seed, 3));

  MixResult out;
  out.records.reserve(order.size());
  for (auto o : order) {
    out.records.push_back(o < ns ? synthetic[si[o]] : external[ei[o - ns]]);
  }
  out.synthetic = ns;
  out.external = ne;
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

StatsRow stats_row(const SynthesisRecord& record) {
  const auto final_text = join_trajectory(record.final_trajectory);
  return StatsRow{record.pair_id,
                  record.category,
                  record.initial_ppl,
                  record.final_ppl,
                  text::word_count(join_trajectory(record.initial_trajectory)),
                  text::word_count(final_text),
                  final_text};
}

StatsRow stats_row(const TrainingRecord& record) {
  if (!record.provenance) {
    throw Error(ErrorCode::kInvalidArgument, "record '" + record.id + "' has no provenance");
  }
  const auto& p = *record.provenance;
  return StatsRow{record.id,        record.category, p.initial_ppl, p.final_ppl,
                  p.initial_words, p.final_words,    record.think};
}

Histogram Histogram::build(std::vector<double> edges, std::span<const double> values) {
  Histogram h;
  h.edges = std::move(edges);
  h.counts.assign(h.edges.size(), 0);
  for (double v : values) {
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
    std::size_t bin = it == h.edges.begin() ? 0 : static_cast<std::size_t>(it - h.edges.begin()) - 1;
    ++h.counts[bin];
  }
  return h;
}

const std::vector<double>& ppl_bin_edges() {
  static const std::vector<double> kEdges = {1, 1.5, 2, 3, 4, 6, 8, 12, 16, 24, 32, 64, 128};
  return kEdges;
}

const std::vector<double>& word_bin_edges() {
  static const std::vector<double> kEdges = {0, 25, 50, 100, 200, 400, 800, 1600, 3200};
  return kEdges;
}

std::vector<std::pair<std::string, std::size_t>> pattern_frequencies(
    std::span<const std::string> texts, const std::vector<std::string>& patterns) {
  if (patterns.empty()) throw Error(ErrorCode::kInvalidArgument, "pattern list is empty");
  text::PatternSet set(patterns);
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& p : patterns) out.emplace_back(p, 0);
  for (const auto& t : texts) {
    const auto counts = set.count(t);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] > 0) ++out[i].second;
    }
  }
  return out;
}

StatsReport compute_stats(std::span<const StatsRow> rows, const std::vector<std::string>& patterns) {
  StatsReport r;
  r.record_count = rows.size();
  std::vector<double> before, after, wb, wa;
  std::vector<std::string> texts;
  std::size_t improved = 0;
  for (const auto& row : rows) {
    before.push_back(row.initial_ppl);
    after.push_back(row.final_ppl);
    wb.push_back(static_cast<double>(row.initial_words));
    wa.push_back(static_cast<double>(row.final_words));
    r.ppl_deltas.push_back(row.initial_ppl - row.final_ppl);
    if (row.final_ppl < row.initial_ppl) ++improved;
    ++r.category_counts[row.category];
    texts.push_back(row.final_text);
  }
  auto mean = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  r.mean_ppl_before = mean(before);
  r.mean_ppl_after = mean(after);
  r.mean_ppl_delta = mean(r.ppl_deltas);
  r.mean_words_before = mean(wb);
  r.mean_words_after = mean(wa);
  r.improvement_fraction =
      rows.empty() ? 0.0 : static_cast<double>(improved) / static_cast<double>(rows.size());
  r.ppl_before = Histogram::build(ppl_bin_edges(), before);
  r.ppl_after = Histogram::build(ppl_bin_edges(), after);
  r.words_before = Histogram::build(word_bin_edges(), wb);
  r.words_after = Histogram::build(word_bin_edges(), wa);
  if (!patterns.empty()) r.pattern_frequencies = pattern_frequencies(texts, patterns);
  return r;
}

json StatsReport::to_json() const {
  json patterns = json::array();
  for (const auto& [p, c] : pattern_frequencies) patterns.push_back(json::array({p, c}));
  return json{{"schema_version", kSchemaVersion},
              {"record_count", record_count},
              {"mean_ppl_before", mean_ppl_before},
              {"mean_ppl_after", mean_ppl_after},
              {"mean_ppl_delta", mean_ppl_delta},
              {"improvement_fraction", improvement_fraction},
              {"mean_words_before", mean_words_before},
              {"mean_words_after", mean_words_after},
              {"ppl_deltas", ppl_deltas},
              {"ppl_before", histogram_json(ppl_before)},
              {"ppl_after", histogram_json(ppl_after)},
              {"words_before", histogram_json(words_before)},
              {"words_after", histogram_json(words_after)},
              {"category_counts", category_counts},
              {"pattern_frequencies", std::move(patterns)}};
}

std::string StatsReport::to_csv() const {
  std::ostringstream out;
  out << "section,key,value\n";
  out << "summary,schema_version," << kSchemaVersion << "\n";
  out << "summary,record_count," << record_count << "\n";
  out << "summary,mean_ppl_before," << number(mean_ppl_before) << "\n";
  out << "summary,mean_ppl_after," << number(mean_ppl_after) << "\n";
  out << "summary,mean_ppl_delta," << number(mean_ppl_delta) << "\n";
  out << "summary,improvement_fraction," << number(improvement_fraction) << "\n";
  out << "summary,mean_words_before," << number(mean_words_before) << "\n";
  out << "summary,mean_words_after," << number(mean_words_after) << "\n";
  auto hist = [&](const char* section, const Histogram& h) {
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      out << section << ',' << bin_label(h, i) << ',' << h.counts[i] << "\n";
    }
  };
  hist("ppl_before", ppl_before);
  hist("ppl_after", ppl_after);
  hist("words_before", words_before);
  hist("words_after", words_after);
  for (const auto& [c, n] : category_counts) out << "category," << csv_field(c) << ',' << n << "\n";
  for (const auto& [p, n] : pattern_frequencies) out << "pattern," << csv_field(p) << ',' << n << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Quality judge

std::string format_quality_prompt(std::string_view query, std::string_view response,
                                  const AssetStore& assets) {
  if (text::trim(query).empty()) throw Error(ErrorCode::kInvalidArgument, "query is empty");
  if (text::trim(response).empty()) throw Error(ErrorCode::kInvalidArgument, "response is empty");
  return assets.get(assets::kQualityRating)
      .render({{"INST", std::string(query)}, {"RESPONSE", std::string(response)}});
}

namespace {

json extract_json_block(std::string_view reply) {
  std::string_view body;
  if (auto fence = reply.find("```json"); fence != std::string_view::npos) {
    auto start = reply.find('\n', fence);
    auto end = start == std::string_view::npos ? start : reply.find("```", start);
    if (end != std::string_view::npos) body = reply.substr(start + 1, end - start - 1);
  }
  if (body.empty()) {
    auto b = reply.find('{');
    auto e = reply.rfind('}');
    if (b == std::string_view::npos || e == std::string_view::npos || e < b) {
      throw Error(ErrorCode::kSchema, "judge reply contains no JSON block");
    }
    body = reply.substr(b, e - b + 1);
  }
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("judge reply JSON is malformed: ") + e.what());
  }
}

int score_value(const json& v, const std::string& field) {
  double d = 0.0;
  if (v.is_number()) {
    d = v.get<double>();
  } else if (v.is_string()) {
    const auto s = std::string(text::trim(v.get<std::string>()));
    try {
      std::size_t used = 0;
      d = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kSchema, "field " + field + " is not a number");
    }
  } else {
    throw Error(ErrorCode::kSchema, "field " + field + " is not a number");
  }
  if (d != std::floor(d)) throw Error(ErrorCode::kOutOfRange, "field " + field + " is not an integer");
  return static_cast<int>(d);
}

DimensionScore dimension(const json& report, const char* key, const char* score_key, int lo, int hi) {
  const std::string base = std::string("evaluationReport.") + key;
  if (!report.contains(key) || !report.at(key).is_object()) {
    throw Error(ErrorCode::kSchema, "missing field " + base);
  }
  const auto& d = report.at(key);
  if (!d.contains(score_key)) throw Error(ErrorCode::kSchema, "missing field " + base + "." + score_key);
  if (!d.contains("justification") || !d.at("justification").is_string()) {
    throw Error(ErrorCode::kSchema, "missing field " + base + ".justification");
  }
  DimensionScore out;
  out.score = score_value(d.at(score_key), base + "." + score_key);
  if (out.score < lo || out.score > hi) {
    throw Error(ErrorCode::kOutOfRange, "field " + base + "." + score_key + " = " +
                                            std::to_string(out.score) + " outside [" +
                                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  out.justification = d.at("justification").get<std::string>();
  return out;
}

}  // namespace

QualityReport parse_quality_report(std::string_view reply) {
  const auto root = extract_json_block(reply);
  if (!root.is_object() || !root.contains("evaluationReport") || !root.at("evaluationReport").is_object()) {
    throw Error(ErrorCode::kSchema, "missing field evaluationReport");
  }
  const auto& report = root.at("evaluationReport");
  QualityReport q;
  q.understanding = dimension(report, "understandingAndDecomposition", "score", 1, 5);
  q.structure = dimension(report, "structureAndConsistency", "score", 1, 5);
  q.depth = dimension(report, "depthOfAnalysis", "score", 1, 5);
  q.clarity = dimension(report, "presentationClarity", "score", 1, 5);
  q.grounding = dimension(report, "factualGrounding", "severityScore", 0, 5);
  if (!report.contains("overallSummary") || !report.at("overallSummary").is_string()) {
    throw Error(ErrorCode::kSchema, "missing field evaluationReport.overallSummary");
  }
  q.overall_summary = report.at("overallSummary").get<std::string>();
  return q;
}

}  // namespace reer
