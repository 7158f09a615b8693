// SPDX-License-Identifier: Apache-2.0
#include "reer/config.hpp"

#include <fstream>
#include <functional>
#include <set>

#include "reer/errors.hpp"
#include "reer/templates.hpp"

namespace reer {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json retry_to_json(const RetryPolicy& r) {
  return json{{"max_attempts", r.max_attempts},
              {"initial_backoff_ms", r.initial_backoff.count()},
              {"multiplier", r.multiplier},
              {"max_backoff_ms", r.max_backoff.count()}};
}

RetryPolicy retry_from_json(const json& j) {
  RetryPolicy r;
  r.max_attempts = j.value("max_attempts", r.max_attempts);
  r.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", r.initial_backoff.count()));
  r.multiplier = j.value("multiplier", r.multiplier);
  r.max_backoff = std::chrono::milliseconds(j.value("max_backoff_ms", r.max_backoff.count()));
  return r;
}

json remote_to_json(const RemoteConfig& r) {
  return json{{"http", r.http.to_json()},
              {"max_in_flight", r.max_in_flight},
              {"retry", retry_to_json(r.retry)}};
}

RemoteConfig remote_from_json(const json& j) {
  RemoteConfig r;
  if (j.contains("http")) r.http = HttpConfig::from_json(j.at("http"));
  r.max_in_flight = j.value("max_in_flight", r.max_in_flight);
  if (j.contains("retry")) r.retry = retry_from_json(j.at("retry"));
  return r;
}

json optional_count(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::size_t> optional_count(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::size_t>();
}

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> keys,
                std::vector<std::string>& errors) {
  if (!j.is_object()) {
    errors.push_back(section + ": expected an object");
    return;
  }
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) errors.push_back(section + ": unknown key '" + k + "'");
  }
}

void remote_problems(const RemoteConfig& r, const std::string& section,
                     std::vector<std::string>& out) {
  if (r.http.base_url.empty()) out.push_back(section + ".http.base_url is empty");
  if (r.max_in_flight < 1) out.push_back(section + ".max_in_flight must be >= 1");
  if (r.retry.max_attempts < 1) out.push_back(section + ".retry.max_attempts must be >= 1");
  if (r.retry.multiplier < 1.0) out.push_back(section + ".retry.multiplier must be >= 1");
}

}  // namespace

json RunConfig::to_json() const {
  auto search_json = search.to_json();
  search_json.erase("seed");
  return json{
      {"schema_version", kSchemaVersion},
      {"seed", search.seed},
      {"workers", workers},
      {"strict_ingest", strict_ingest},
      {"paths",
       {{"pairs", paths.pairs},
        {"synthesis", paths.synthesis},
        {"filtered", paths.filtered},
        {"training", paths.training},
        {"stats_json", paths.stats_json},
        {"stats_csv", paths.stats_csv},
        {"scores", paths.scores},
        {"external", paths.external},
        {"mixed", paths.mixed},
        {"judge_prompts", paths.judge_prompts},
        {"assets_dir", paths.assets_dir},
        {"cache_dir", paths.cache_dir}}},
      {"search", std::move(search_json)},
      {"filters", filters.to_json()},
      {"generation", generation.to_json()},
      {"generator", {{"kind", generator.kind}, {"remote", remote_to_json(generator.remote)}}},
      {"scorer",
       {{"kind", scorer.kind},
        {"model", scorer.model},
        {"reference",
         {{"order", scorer.reference.order},
          {"corpus", scorer.reference.corpus},
          {"in_context", scorer.reference.in_context},
          {"reserve_unknown", scorer.reference.reserve_unknown}}},
        {"remote", remote_to_json(scorer.remote)}}},
      {"mix",
       {{"synthetic_count", optional_count(mix.synthetic_count)},
        {"external_count", optional_count(mix.external_count)},
        {"synthetic_weight", mix.synthetic_weight},
        {"external_weight", mix.external_weight},
        {"strict", mix.strict}}}};
}

RunConfig RunConfig::from_json(const json& j) {
  std::vector<std::string> errors;
  RunConfig c;
  check_keys(j, "config",
             {"schema_version", "seed", "workers", "strict_ingest", "paths", "search", "filters",
              "generation", "generator", "scorer", "mix"},
             errors);
  if (!errors.empty() && !j.is_object()) {
    throw Error(ErrorCode::kConfig, "invalid config:\n  " + errors.front());
  }
  // Each section parses independently so one bad value does not hide others.
  auto section = [&](const char* name, const std::function<void(const json&)>& parse) {
    if (!j.contains(name)) return;
    try {
      parse(j.at(name));
    } catch (const Error& e) {
      errors.push_back(e.what());
    } catch (const json::exception& e) {
      errors.push_back(std::string(name) + ": " + e.what());
    }
  };
  section("schema_version", [&](const json& v) {
    if (v.get<int>() != kSchemaVersion) {
      errors.push_back("schema_version " + v.dump() + " is not supported");
    }
  });
  section("workers", [&](const json& v) { c.workers = v.get<std::size_t>(); });
  section("strict_ingest", [&](const json& v) { c.strict_ingest = v.get<bool>(); });
  section("paths", [&](const json& p) {
    check_keys(p, "paths",
               {"pairs", "synthesis", "filtered", "training", "stats_json", "stats_csv", "scores",
                "external", "mixed", "judge_prompts", "assets_dir", "cache_dir"},
               errors);
    auto& P = c.paths;
    P.pairs = p.value("pairs", P.pairs);
    P.synthesis = p.value("synthesis", P.synthesis);
    P.filtered = p.value("filtered", P.filtered);
    P.training = p.value("training", P.training);
    P.stats_json = p.value("stats_json", P.stats_json);
    P.stats_csv = p.value("stats_csv", P.stats_csv);
    P.scores = p.value("scores", P.scores);
    P.external = p.value("external", P.external);
    P.mixed = p.value("mixed", P.mixed);
    P.judge_prompts = p.value("judge_prompts", P.judge_prompts);
    P.assets_dir = p.value("assets_dir", P.assets_dir);
    P.cache_dir = p.value("cache_dir", P.cache_dir);
  });
  section("search", [&](const json& s) {
    check_keys(s, "search", {"max_iterations", "ppl_threshold", "candidates_per_expansion", "passes"},
               errors);
    c.search = SearchConfig::from_json(s);
  });
  section("seed", [&](const json& v) { c.search.seed = v.get<std::uint64_t>(); });
  section("filters", [&](const json& f) {
    check_keys(f, "filters", {"tail_fraction", "ngram", "top_k", "repetition_threshold"}, errors);
    c.filters = FilterConfig::from_json(f);
  });
  section("generation", [&](const json& g) {
    check_keys(g, "generation", {"model", "max_new_tokens", "sampling", "endpoint", "no_copy_span"},
               errors);
    c.generation = GenerationConfig::from_json(g);
  });
  section("generator", [&](const json& g) {
    check_keys(g, "generator", {"kind", "remote"}, errors);
    c.generator.kind = g.value("kind", c.generator.kind);
    if (g.contains("remote")) c.generator.remote = remote_from_json(g.at("remote"));
  });
  section("scorer", [&](const json& s) {
    check_keys(s, "scorer", {"kind", "model", "reference", "remote"}, errors);
    c.scorer.kind = s.value("kind", c.scorer.kind);
    c.scorer.model = s.value("model", c.scorer.model);
    if (s.contains("reference")) {
      const auto& r = s.at("reference");
      check_keys(r, "scorer.reference", {"order", "corpus", "in_context", "reserve_unknown"}, errors);
      auto& R = c.scorer.reference;
      R.order = r.value("order", R.order);
      R.corpus = r.value("corpus", R.corpus);
      R.in_context = r.value("in_context", R.in_context);
      R.reserve_unknown = r.value("reserve_unknown", R.reserve_unknown);
    }
    if (s.contains("remote")) c.scorer.remote = remote_from_json(s.at("remote"));
  });
  section("mix", [&](const json& m) {
    check_keys(m, "mix",
               {"synthetic_count", "external_count", "synthetic_weight", "external_weight", "strict"},
               errors);
    c.mix.synthetic_count = optional_count(m, "synthetic_count");
    c.mix.external_count = optional_count(m, "external_count");
    c.mix.synthetic_weight = m.value("synthetic_weight", c.mix.synthetic_weight);
    c.mix.external_weight = m.value("external_weight", c.mix.external_weight);
    c.mix.strict = m.value("strict", c.mix.strict);
  });
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(ErrorCode::kConfig, msg);
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": invalid JSON (" + e.what() + ")");
  }
  return from_json(j);
}

std::vector<std::string> RunConfig::problems(Command command) const {
  std::vector<std::string> out;
  auto capture = [&](const std::function<void()>& check) {
    try {
      check();
    } catch (const Error& e) {
      out.push_back(e.what());
    }
  };
  capture([&] { search.validate(); });
  capture([&] { filters.validate(); });
  if (workers < 1) out.push_back("workers must be >= 1");

  const bool needs_backends = command == Command::kSynthesize || command == Command::kScore;
  if (needs_backends) {
    if (command == Command::kSynthesize) {
      if (generator.kind == "remote") {
        remote_problems(generator.remote, "generator.remote", out);
      } else if (generator.kind != "scripted") {
        out.push_back("generator.kind must be 'scripted' or 'remote', got '" + generator.kind + "'");
      }
    }
    if (scorer.kind == "remote") {
      remote_problems(scorer.remote, "scorer.remote", out);
    } else if (scorer.kind == "reference_lm") {
      if (scorer.reference.order < 1) out.push_back("scorer.reference.order must be >= 1");
      if (!scorer.reference.corpus.empty() && !fs::is_regular_file(scorer.reference.corpus)) {
        out.push_back("scorer.reference.corpus: file not found: " + scorer.reference.corpus);
      }
    } else {
      out.push_back("scorer.kind must be 'reference_lm' or 'remote', got '" + scorer.kind + "'");
    }
  }
  if (command == Command::kAssemble) {
    if (mix.synthetic_weight < 0 || mix.external_weight < 0 ||
        (mix.synthetic_weight == 0 && mix.external_weight == 0)) {
      out.push_back("mix weights must be >= 0 and not both zero");
    }
    if (!paths.external.empty() && paths.mixed.empty()) {
      out.push_back("paths.mixed is required when paths.external is set");
    }
  }

  if (paths.assets_dir.empty()) {
    capture([&] { AssetStore::builtin(); });
  } else if (!fs::is_directory(paths.assets_dir)) {
    out.push_back("paths.assets_dir: directory not found: " + paths.assets_dir);
  } else {
    capture([&] { AssetStore::load_directory(paths.assets_dir); });
  }

  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<std::pair<std::string, std::string>> outputs;
  switch (command) {
    case Command::kSynthesize:
      inputs = {{"paths.pairs", paths.pairs}};
      outputs = {{"paths.synthesis", paths.synthesis}};
      break;
    case Command::kFilter:
      inputs = {{"paths.synthesis", paths.synthesis}};
      outputs = {{"paths.filtered", paths.filtered}};
      break;
    case Command::kAssemble:
      inputs = {{"paths.filtered", paths.filtered}, {"paths.pairs", paths.pairs}};
      if (!paths.external.empty()) inputs.emplace_back("paths.external", paths.external);
      outputs = {{"paths.training", paths.training}};
      if (!paths.mixed.empty() && !paths.external.empty()) {
        outputs.emplace_back("paths.mixed", paths.mixed);
      }
      break;
    case Command::kStats:
      inputs = {{"paths.training", paths.training}};
      outputs = {{"paths.stats_json", paths.stats_json}, {"paths.stats_csv", paths.stats_csv}};
      if (!paths.judge_prompts.empty()) outputs.emplace_back("paths.judge_prompts", paths.judge_prompts);
      break;
    case Command::kScore:
      inputs = {{"paths.synthesis", paths.synthesis}, {"paths.pairs", paths.pairs}};
      outputs = {{"paths.scores", paths.scores}};
      break;
  }
  for (const auto& [name, p] : inputs) {
    if (p.empty()) {
      out.push_back(name + " is empty");
    } else if (!fs::is_regular_file(p)) {
      out.push_back(name + ": file not found: " + p);
    }
  }
  auto same = [](const std::string& a, const std::string& b) {
    return fs::weakly_canonical(a) == fs::weakly_canonical(b);
  };
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& [oname, op] = outputs[i];
    if (op.empty()) {
      out.push_back(oname + " is empty");
      continue;
    }
    for (const auto& [iname, ip] : inputs) {
      if (!ip.empty() && same(op, ip)) out.push_back(oname + " would overwrite input " + iname);
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (!outputs[k].second.empty() && same(op, outputs[k].second)) {
        out.push_back(oname + " collides with " + outputs[k].first);
      }
    }
  }
  return out;
}

void RunConfig::validate(Command command) const {
  const auto list = problems(command);
  if (list.empty()) return;
  std::string msg = "invalid config (" + std::to_string(list.size()) + " problem" +
                    (list.size() == 1 ? "" : "s") + "):";
  for (const auto& p : list) msg += "\n  " + p;
  throw Error(ErrorCode::kConfig, msg);
}

}  // namespace reer
