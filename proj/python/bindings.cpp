// SPDX-License-Identifier: Apache-2.0
// Python bindings. Structured values cross the boundary as JSON strings; the
// package's __init__ turns them into dicts.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "reer/cli.hpp"
#include "reer/core.hpp"
#include "reer/dataset.hpp"
#include "reer/errors.hpp"
#include "reer/filters.hpp"
#include "reer/scoring.hpp"
#include "reer/search.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

reer::QuerySolutionPair pair_from(const std::string& s) {
  const auto j = json::parse(s);
  reer::QuerySolutionPair p;
  p.id = j.at("id").get<std::string>();
  p.query = j.at("query").get<std::string>();
  p.solution = j.at("solution").get<std::string>();
  p.category = j.value("category", std::string("other"));
  p.source = reer::source_from_string(j.value("source", std::string("fixture")));
  p.validate();
  return p;
}

std::string verdict_json(const reer::FilterVerdict& v) { return v.to_json().dump(); }

}  // namespace

PYBIND11_MODULE(_reer, m) {
  m.doc() = "Perplexity-guided reasoning trajectory synthesis";

  static py::exception<reer::Error> error(m, "ReerError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const reer::Error& e) {
      py::set_error(error, (std::string(reer::to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("segment_trajectory", [](const std::string& text) {
    return reer::segment_trajectory(text).texts();
  });
  m.def("join_trajectory", [](const std::vector<std::string>& segments) {
    return reer::join_trajectory(reer::Trajectory(segments));
  });
  m.def("perplexity", [](const std::vector<double>& lp) { return reer::perplexity(lp); });

  py::class_<reer::ReferenceLM>(m, "ReferenceLM")
      .def_static("train", &reer::ReferenceLM::train, py::arg("corpus"), py::arg("order"),
                  py::arg("reserve_unknown") = false)
      .def("log_prob",
           [](const reer::ReferenceLM& lm, const std::string& history, const std::string& next) {
             const auto h = reer::text::decode_utf8(history);
             const auto n = reer::text::decode_utf8(next);
             if (n.size() != 1) throw reer::Error(reer::ErrorCode::kInvalidArgument, "next must be one character");
             return lm.log_prob(h, n[0]);
           })
      .def("score",
           [](const reer::ReferenceLM& lm, const std::string& prompt, const std::string& solution,
              bool in_context) {
             reer::ScoreContext ctx{prompt, solution, reer::text::code_point_count(prompt), ""};
             const auto r = in_context ? reer::score_in_context(lm, ctx)
                                       : reer::score_with_reference(lm, ctx);
             return py::make_tuple(r.token_logprobs, r.ppl);
           },
           py::arg("prompt"), py::arg("solution"), py::arg("in_context") = false)
      .def_property_readonly("order", &reer::ReferenceLM::order)
      .def_property_readonly("vocabulary_size", &reer::ReferenceLM::vocabulary_size)
      .def_property_readonly("id", &reer::ReferenceLM::id);

  m.def("end_of_thinking_filter_json", [](const std::string& text, double tail_fraction) {
    const reer::text::PatternSet patterns(reer::AssetStore::builtin().patterns());
    return verdict_json(reer::end_of_thinking_filter(text, patterns, tail_fraction));
  });
  m.def("repetition_filter_json",
        [](const std::string& text, std::size_t n, std::size_t top_k, double threshold) {
          return verdict_json(reer::repetition_filter(text, n, top_k, threshold));
        });

  m.def("format_training_text_json", [](const std::string& record) {
    return reer::format_training_text(reer::TrainingRecord::from_json(json::parse(record)));
  });
  m.def("parse_training_text", [](const std::string& text) {
    const auto p = reer::parse_training_text(text);
    return py::make_tuple(p.preamble, p.think, p.answer);
  });
  m.def("format_quality_prompt", [](const std::string& q, const std::string& r) {
    return reer::format_quality_prompt(q, r);
  });
  m.def("parse_quality_report_json", [](const std::string& reply) {
    const auto q = reer::parse_quality_report(reply);
    auto dim = [](const reer::DimensionScore& d) {
      return json{{"score", d.score}, {"justification", d.justification}};
    };
    return json{{"understanding", dim(q.understanding)},
                {"structure", dim(q.structure)},
                {"depth", dim(q.depth)},
                {"clarity", dim(q.clarity)},
                {"grounding", dim(q.grounding)},
                {"overall_summary", q.overall_summary}}
        .dump();
  });
  m.def("mix_counts", [](std::size_t synthetic, std::size_t external, std::uint64_t seed) {
    // Stub records carry only an id and an origin; returns the mixed id order.
    std::vector<reer::TrainingRecord> s(synthetic), e(external);
    for (std::size_t i = 0; i < synthetic; ++i) s[i].id = "s" + std::to_string(i);
    for (std::size_t i = 0; i < external; ++i) {
      e[i].id = "e" + std::to_string(i);
      e[i].origin = "external";
    }
    const auto r = reer::mix_datasets(s, e, {synthetic, external}, seed);
    std::vector<std::string> ids;
    ids.reserve(r.records.size());
    for (const auto& rec : r.records) ids.push_back(rec.id);
    return ids;
  });

  m.def("run_search_json",
        [](const std::string& pair, const std::string& search_config, int order) {
          const auto p = pair_from(pair);
          const auto cfg = reer::SearchConfig::from_json(json::parse(search_config));
          const auto& assets = reer::AssetStore::builtin();
          reer::DeterministicBackend generator;
          reer::ReferenceScorer scorer(
              reer::ReferenceLM::train(reer::cli::default_reference_corpus(assets), order, true), true);
          reer::SearchEnvironment env{generator, scorer, reer::GenerationConfig{}, assets, {}};
          py::gil_scoped_release release;
          return reer::run_search(p, cfg, env).to_json().dump();
        },
        py::arg("pair"), py::arg("search_config") = "{}", py::arg("order") = 4);

  m.def("run_demo_json",
        [](const std::string& output_dir, std::uint64_t seed, std::size_t workers) {
          reer::cli::DemoOptions opts;
          opts.output_dir = output_dir;
          opts.seed = seed;
          opts.workers = workers;
          std::ostringstream log;
          reer::cli::DemoReport r;
          {
            py::gil_scoped_release release;
            r = reer::cli::cmd_demo(opts, log);
          }
          return json{{"exit_code", r.exit_code},
                      {"pairs", r.synthesized},
                      {"assembled", r.assembled},
                      {"network_calls", r.network_calls},
                      {"generator_calls", r.generator_calls},
                      {"stats", r.stats.to_json()},
                      {"log", log.str()}}
              .dump();
        },
        py::arg("output_dir"), py::arg("seed") = 0, py::arg("workers") = 1);
}
