// SPDX-License-Identifier: Apache-2.0
#include "reer/cli.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "reer/errors.hpp"
#include "reer/search.hpp"

#ifndef REER_FIXTURE_DIR
#define REER_FIXTURE_DIR "data/fixtures"
#endif

namespace reer::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<Backend> wrap_remote(const RemoteConfig& remote, const std::string& cache_dir) {
  std::shared_ptr<Backend> b = std::make_shared<HttpBackend>(remote.http);
  b = std::make_shared<RetryingBackend>(b, remote.retry);
  b = std::make_shared<LimitedBackend>(b, remote.max_in_flight);
  if (!cache_dir.empty()) b = std::make_shared<CachedBackend>(b, cache_dir);
  return b;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Streams lines to `path` through a temp file that is renamed on close.
class LineWriter {
 public:
  explicit LineWriter(fs::path path) : path_(std::move(path)), tmp_(path_) {
    tmp_ += ".partial";
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(ErrorCode::kIo, "cannot write '" + tmp_.string() + "'");
  }
  void write(const std::string& line) {
    out_ << line << '\n';
    out_.flush();
    if (!out_) throw Error(ErrorCode::kIo, "write to '" + tmp_.string() + "' failed");
    ++lines_;
  }
  void close() {
    out_.close();
    fs::rename(tmp_, path_);
  }
  std::size_t lines() const { return lines_; }

 private:
  fs::path path_;
  fs::path tmp_;
  std::ofstream out_;
  std::size_t lines_ = 0;
};

std::map<std::string, QuerySolutionPair> pairs_by_id(const RunConfig& config,
                                                     const AssetStore& assets) {
  IngestOptions opts;
  opts.strict = config.strict_ingest;
  opts.categories = assets.categories();
  std::map<std::string, QuerySolutionPair> out;
  for (auto& p : ingest_pairs(fs::path(config.paths.pairs), opts).pairs) out.emplace(p.id, std::move(p));
  return out;
}

std::vector<TrainingRecord> read_training_records(const fs::path& path) {
  std::vector<TrainingRecord> out;
  std::size_t i = 0;
  for (const auto& j : read_jsonl(path)) {
    ++i;
    try {
      out.push_back(TrainingRecord::from_json(j));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ": record " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << std::fixed << v;
  return ss.str();
}

}  // namespace

AssetStore load_assets(const RunConfig& config) {
  if (config.paths.assets_dir.empty()) return AssetStore::builtin();
  return AssetStore::load_directory(config.paths.assets_dir);
}

std::string default_reference_corpus(const AssetStore& assets) {
  std::string corpus;
  for (const auto& [name, provenance] : assets.versions()) {
    corpus += assets.get(name).content;
    corpus += "\n";
  }
  for (char c = ' '; c <= '~'; ++c) corpus += c;
  corpus += "\n";
  return corpus;
}

std::shared_ptr<Backend> make_generator(const RunConfig& config) {
  if (config.generator.kind == "remote") return wrap_remote(config.generator.remote, config.paths.cache_dir);
  if (config.generator.kind == "scripted") return std::make_shared<DeterministicBackend>();
  throw Error(ErrorCode::kConfig, "unknown generator kind '" + config.generator.kind + "'");
}

std::shared_ptr<Scorer> make_scorer(const RunConfig& config, const AssetStore& assets) {
  if (config.scorer.kind == "remote") {
    return std::make_shared<RemoteScorer>(wrap_remote(config.scorer.remote, config.paths.cache_dir),
                                          config.scorer.model);
  }
  if (config.scorer.kind != "reference_lm") {
    throw Error(ErrorCode::kConfig, "unknown scorer kind '" + config.scorer.kind + "'");
  }
  const auto& r = config.scorer.reference;
  const auto corpus = r.corpus.empty() ? default_reference_corpus(assets) : read_file(r.corpus);
  return std::make_shared<ReferenceScorer>(ReferenceLM::train(corpus, r.order, r.reserve_unknown),
                                           r.in_context);
}

CommandReport cmd_synthesize(const RunConfig& config, std::ostream& log,
                             const std::atomic<bool>* stop) {
  config.validate(Command::kSynthesize);
  const auto assets = load_assets(config);
  return cmd_synthesize(config, make_generator(config), make_scorer(config, assets), log, stop);
}

CommandReport cmd_synthesize(const RunConfig& config, std::shared_ptr<Backend> generator,
                             std::shared_ptr<Scorer> scorer, std::ostream& log,
                             const std::atomic<bool>* stop) {
  config.validate(Command::kSynthesize);
  const auto assets = load_assets(config);
  IngestOptions opts;
  opts.strict = config.strict_ingest;
  opts.categories = assets.categories();
  const auto ingest = ingest_pairs(fs::path(config.paths.pairs), opts);
  for (const auto& d : ingest.diagnostics) log << "skipped " << config.paths.pairs << " " << d << "\n";

  SearchEnvironment env{*generator, *scorer, config.generation, assets, {}};
  LineWriter out(config.paths.synthesis);
  std::size_t emitted = 0;
  const std::size_t total = ingest.pairs.size();
  auto sink = [&](const SynthesisRecord& rec) {
    out.write(rec.to_jsonl());
    ++emitted;
    log << "[" << emitted << "/" << total << "] " << rec.pair_id << " ppl " << fmt(rec.initial_ppl)
        << " -> " << fmt(rec.final_ppl) << " in " << rec.iterations << " steps ("
        << to_string(rec.stop_reason) << ")" << (rec.degraded ? " degraded: " + rec.error : "")
        << "\n";
  };
  const auto outcome = run_batch(ingest.pairs, config.search, env, config.workers, sink, stop);
  out.close();
  for (const auto& f : outcome.failures) log << "failed " << f << "\n";

  const bool interrupted = outcome.completed + outcome.failed < total;
  CommandReport report;
  report.summary = json{{"pairs", total},
                        {"records", outcome.completed},
                        {"degraded", outcome.degraded},
                        {"failed", outcome.failed},
                        {"skipped_lines", ingest.skipped},
                        {"interrupted", interrupted},
                        {"output", config.paths.synthesis}};
  report.exit_code = (outcome.failed > 0 || interrupted) ? kExitPartial : kExitOk;
  log << "synthesize: " << outcome.completed << " records, " << outcome.degraded << " degraded, "
      << outcome.failed << " failed" << (interrupted ? ", interrupted" : "") << " -> "
      << config.paths.synthesis << "\n";
  return report;
}

CommandReport cmd_filter(const RunConfig& config, std::ostream& log) {
  config.validate(Command::kFilter);
  const auto assets = load_assets(config);
  const text::PatternSet patterns(assets.patterns());
  auto records = read_synthesis_records(config.paths.synthesis);
  std::size_t passed = 0;
  std::map<std::string, std::size_t> failures;
  std::string body;
  for (auto& rec : records) {
    rec.filter_verdicts = apply_filters(join_trajectory(rec.final_trajectory), patterns, config.filters);
    if (all_passed(rec.filter_verdicts)) {
      ++passed;
    } else {
      for (const auto& v : rec.filter_verdicts) {
        if (!v.passed) ++failures[std::string(to_string(v.filter_id))];
      }
    }
    body += rec.to_jsonl();
    body += '\n';
  }
  write_text_file(config.paths.filtered, body);
  CommandReport report;
  report.summary = json{{"records", records.size()},
                        {"passed", passed},
                        {"failed", records.size() - passed},
                        {"failures_by_filter", failures},
                        {"output", config.paths.filtered}};
  log << "filter: " << passed << "/" << records.size() << " passed -> " << config.paths.filtered
      << "\n";
  return report;
}

CommandReport cmd_assemble(const RunConfig& config, std::ostream& log) {
  config.validate(Command::kAssemble);
  const auto assets = load_assets(config);
  const auto pairs = pairs_by_id(config, assets);
  const auto records = read_synthesis_records(config.paths.filtered);

  std::vector<TrainingRecord> training;
  std::map<std::string, std::size_t> excluded;
  std::size_t missing_pairs = 0;
  std::string body;
  for (const auto& rec : records) {
    auto it = pairs.find(rec.pair_id);
    if (it == pairs.end()) {
      log << "assemble: no pair with id '" << rec.pair_id << "' in " << config.paths.pairs << "\n";
      ++missing_pairs;
      continue;
    }
    if (rec.filter_verdicts.empty()) {
      ++excluded["unfiltered"];
      continue;
    }
    if (!all_passed(rec.filter_verdicts)) {
      for (const auto& v : rec.filter_verdicts) {
        if (!v.passed) {
          ++excluded[std::string(to_string(v.filter_id))];
          break;
        }
      }
      continue;
    }
    auto assembled = assemble_training_record(rec, it->second, assets);
    body += assembled.record.to_json(assets).dump();
    body += '\n';
    training.push_back(std::move(assembled.record));
  }
  write_text_file(config.paths.training, body);
  std::size_t excluded_total = 0;
  for (const auto& [k, n] : excluded) excluded_total += n;

  CommandReport report;
  report.summary = json{{"records", records.size()},
                        {"assembled", training.size()},
                        {"excluded", excluded_total},
                        {"excluded_by_reason", excluded},
                        {"missing_pairs", missing_pairs},
                        {"output", config.paths.training}};
  log << "assemble: " << training.size() << " training records, " << excluded_total
      << " excluded -> " << config.paths.training << "\n";

  if (!config.paths.external.empty()) {
    const auto external = read_training_records(config.paths.external);
    MixTarget target = MixTarget::from_ratio(config.mix.synthetic_weight, config.mix.external_weight,
                                             training.size(), external.size());
    if (config.mix.synthetic_count) target.synthetic = *config.mix.synthetic_count;
    if (config.mix.external_count) target.external = *config.mix.external_count;
    const auto mixed = mix_datasets(training, external, target, config.search.seed, config.mix.strict);
    std::string mixed_body;
    for (const auto& r : mixed.records) {
      mixed_body += r.to_json(assets).dump();
      mixed_body += '\n';
    }
    write_text_file(config.paths.mixed, mixed_body);
    report.summary["mixed"] = json{{"records", mixed.records.size()},
                                   {"synthetic", mixed.synthetic},
                                   {"external", mixed.external},
                                   {"output", config.paths.mixed}};
    log << "assemble: mixed " << mixed.synthetic << " synthetic + " << mixed.external
        << " external -> " << config.paths.mixed << "\n";
  }
  report.exit_code = missing_pairs > 0 ? kExitPartial : kExitOk;
  return report;
}

CommandReport cmd_stats(const RunConfig& config, std::ostream& log) {
  config.validate(Command::kStats);
  const auto assets = load_assets(config);
  const auto records = read_training_records(config.paths.training);
  std::vector<StatsRow> rows;
  std::size_t without_provenance = 0;
  for (const auto& r : records) {
    if (r.provenance) {
      rows.push_back(stats_row(r));
    } else {
      ++without_provenance;
    }
  }
  const auto stats = compute_stats(rows, assets.patterns());
  write_text_file(config.paths.stats_json, stats.to_json().dump(2) + "\n");
  write_text_file(config.paths.stats_csv, stats.to_csv());
  if (!config.paths.judge_prompts.empty()) {
    std::string body;
    for (const auto& r : records) {
      body += json{{"id", r.id}, {"prompt", format_quality_prompt(r.query, r.answer, assets)}}.dump();
      body += '\n';
    }
    write_text_file(config.paths.judge_prompts, body);
  }
  CommandReport report;
  report.summary = json{{"records", rows.size()},
                        {"without_provenance", without_provenance},
                        {"mean_ppl_before", stats.mean_ppl_before},
                        {"mean_ppl_after", stats.mean_ppl_after},
                        {"improvement_fraction", stats.improvement_fraction},
                        {"mean_words_before", stats.mean_words_before},
                        {"mean_words_after", stats.mean_words_after},
                        {"output", {config.paths.stats_json, config.paths.stats_csv}}};
  log << "stats: " << rows.size() << " records, mean ppl " << fmt(stats.mean_ppl_before) << " -> "
      << fmt(stats.mean_ppl_after) << ", improved " << fmt(stats.improvement_fraction) << ", words "
      << fmt(stats.mean_words_before) << " -> " << fmt(stats.mean_words_after) << "\n";
  return report;
}

CommandReport cmd_score(const RunConfig& config, std::ostream& log) {
  config.validate(Command::kScore);
  const auto assets = load_assets(config);
  const auto pairs = pairs_by_id(config, assets);
  const auto records = read_synthesis_records(config.paths.synthesis);
  auto scorer = make_scorer(config, assets);
  auto score = [&](const QuerySolutionPair& pair, const Trajectory& t) {
    return scorer->score(assemble_scoring_prompt(pair, t, assets));
  };
  std::string body;
  std::size_t failed = 0;
  for (const auto& rec : records) {
    auto it = pairs.find(rec.pair_id);
    if (it == pairs.end()) {
      log << "score: no pair with id '" << rec.pair_id << "'\n";
      ++failed;
      continue;
    }
    try {
      const auto before = score(it->second, rec.initial_trajectory);
      const auto after = score(it->second, rec.final_trajectory);
      body += json{{"id", rec.pair_id},
                   {"initial_ppl", before.ppl},
                   {"final_ppl", after.ppl},
                   {"token_count", after.token_count},
                   {"scorer_id", after.scorer_id}}
                  .dump();
      body += '\n';
    } catch (const Error& e) {
      log << "score: " << rec.pair_id << ": " << e.what() << "\n";
      ++failed;
    }
  }
  write_text_file(config.paths.scores, body);
  CommandReport report;
  report.summary = json{{"records", records.size()},
                        {"scored", records.size() - failed},
                        {"failed", failed},
                        {"scorer_id", scorer->id()},
                        {"output", config.paths.scores}};
  report.exit_code = failed > 0 ? kExitPartial : kExitOk;
  log << "score: " << records.size() - failed << "/" << records.size() << " scored with "
      << scorer->id() << " -> " << config.paths.scores << "\n";
  return report;
}

fs::path default_fixture_pairs() {
  const fs::path local = fs::path("data") / "fixtures" / "pairs.jsonl";
  if (fs::is_regular_file(local)) return local;
  return fs::path(REER_FIXTURE_DIR) / "pairs.jsonl";
}

RunConfig demo_config(const DemoOptions& options) {
  RunConfig c;
  const auto dir = options.output_dir;
  c.paths.pairs = (options.pairs.empty() ? default_fixture_pairs() : options.pairs).string();
  c.paths.synthesis = (dir / "synthesis.jsonl").string();
  c.paths.filtered = (dir / "filtered.jsonl").string();
  c.paths.training = (dir / "training.jsonl").string();
  c.paths.stats_json = (dir / "stats.json").string();
  c.paths.stats_csv = (dir / "stats.csv").string();
  c.paths.scores = (dir / "scores.jsonl").string();
  c.search.seed = options.seed;
  c.workers = options.workers;
  c.generator.kind = "scripted";
  c.scorer.kind = "reference_lm";
  c.scorer.reference = ReferenceLMConfig{};
  return c;
}

DemoReport cmd_demo(const DemoOptions& options, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t http_before = HttpBackend::requests_sent();
  DemoReport report;
  report.config = demo_config(options);
  const auto& config = report.config;
  config.validate(Command::kSynthesize);
  const auto assets = load_assets(config);

  auto generator = std::make_shared<CountingBackend>(std::make_shared<DeterministicBackend>());
  const auto synth = cmd_synthesize(config, generator, make_scorer(config, assets), log);
  cmd_filter(config, log);
  const auto assembled = cmd_assemble(config, log);
  cmd_stats(config, log);

  // Same rows cmd_stats reported on, kept for callers that check the numbers.
  std::vector<StatsRow> rows;
  for (const auto& j : read_jsonl(config.paths.training)) {
    rows.push_back(stats_row(TrainingRecord::from_json(j)));
  }
  report.stats = compute_stats(rows, assets.patterns());

  report.pairs = synth.summary.at("pairs").get<std::size_t>();
  report.synthesized = synth.summary.at("records").get<std::size_t>();
  report.degraded = synth.summary.at("degraded").get<std::size_t>();
  report.assembled = assembled.summary.at("assembled").get<std::size_t>();
  report.excluded = assembled.summary.at("excluded").get<std::size_t>();
  report.generator_calls = generator->calls();
  report.network_calls = HttpBackend::requests_sent() - http_before;
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.exit_code = std::max(synth.exit_code, assembled.exit_code);
  if (report.network_calls != 0) {
    log << "demo: " << report.network_calls << " requests reached the network\n";
    report.exit_code = kExitFatal;
  }
  log << "demo: " << report.synthesized << " pairs, mean ppl " << fmt(report.stats.mean_ppl_before)
      << " -> " << fmt(report.stats.mean_ppl_after) << ", improved "
      << fmt(report.stats.improvement_fraction) << ", " << report.generator_calls
      << " offline generator calls, " << report.network_calls << " network calls, "
      << fmt(report.seconds) << " s\n";
  return report;
}

}  // namespace reer::cli
