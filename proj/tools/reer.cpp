// SPDX-License-Identifier: Apache-2.0
// Command-line entry point. Progress goes to stderr, the command summary to
// stdout as JSON.
#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <iostream>
#include <optional>

#include "reer/cli.hpp"
#include "reer/errors.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string input;
  std::string output;
};

reer::RunConfig load(const Overrides& o) {
  auto c = reer::RunConfig::load(o.config);
  if (o.seed) c.search.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perplexity-guided reasoning trajectory synthesis"};
  app.require_subcommand(1);

  Overrides o;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  };

  auto* synth = app.add_subcommand("synthesize", "Run the search over every input pair");
  add_config(synth);
  synth->add_option("--seed", o.seed, "Override the search seed");
  synth->add_option("--workers", o.workers, "Override the worker count")->check(CLI::PositiveNumber);
  synth->add_option("--input", o.input, "Override paths.pairs");
  synth->add_option("--output", o.output, "Override paths.synthesis");

  auto* filter = app.add_subcommand("filter", "Attach filter verdicts to synthesis records");
  add_config(filter);
  filter->add_option("--input", o.input, "Override paths.synthesis");
  filter->add_option("--output", o.output, "Override paths.filtered");

  auto* assemble = app.add_subcommand("assemble", "Build training records from filtered records");
  add_config(assemble);
  assemble->add_option("--input", o.input, "Override paths.filtered");
  assemble->add_option("--output", o.output, "Override paths.training");
  assemble->add_option("--seed", o.seed, "Override the mixing seed");

  auto* stats = app.add_subcommand("stats", "Perplexity, length, category and pattern statistics");
  add_config(stats);
  stats->add_option("--input", o.input, "Override paths.training");
  std::string judge_prompts;
  stats->add_option("--judge-prompts", judge_prompts, "Also write quality-rating prompts here");

  auto* score = app.add_subcommand("score", "Rescore synthesis records with the configured scorer");
  add_config(score);
  score->add_option("--input", o.input, "Override paths.synthesis");
  score->add_option("--output", o.output, "Override paths.scores");

  reer::cli::DemoOptions demo_opts;
  auto* demo = app.add_subcommand("demo", "Offline end-to-end run on the shipped fixtures");
  demo->add_option("--pairs", demo_opts.pairs, "Input pairs (default: shipped fixtures)");
  demo->add_option("--output-dir", demo_opts.output_dir, "Where to write the run's files");
  demo->add_option("--seed", demo_opts.seed, "Search seed");
  demo->add_option("--workers", demo_opts.workers, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests report success; usage errors are fatal.
    const int code = app.exit(e);
    return code == 0 ? 0 : reer::cli::kExitFatal;
  }
  std::signal(SIGINT, on_sigint);

  try {
    reer::cli::CommandReport report;
    if (*demo) {
      const auto r = reer::cli::cmd_demo(demo_opts, std::cerr);
      report.exit_code = r.exit_code;
      report.summary = {{"pairs", r.pairs},
                        {"synthesized", r.synthesized},
                        {"assembled", r.assembled},
                        {"excluded", r.excluded},
                        {"mean_ppl_before", r.stats.mean_ppl_before},
                        {"mean_ppl_after", r.stats.mean_ppl_after},
                        {"improvement_fraction", r.stats.improvement_fraction},
                        {"mean_words_before", r.stats.mean_words_before},
                        {"mean_words_after", r.stats.mean_words_after},
                        {"generator_calls", r.generator_calls},
                        {"network_calls", r.network_calls},
                        {"output_dir", demo_opts.output_dir.string()}};
    } else {
      auto config = load(o);
      if (*synth) {
        if (!o.input.empty()) config.paths.pairs = o.input;
        if (!o.output.empty()) config.paths.synthesis = o.output;
        report = reer::cli::cmd_synthesize(config, std::cerr, &g_stop);
      } else if (*filter) {
        if (!o.input.empty()) config.paths.synthesis = o.input;
        if (!o.output.empty()) config.paths.filtered = o.output;
        report = reer::cli::cmd_filter(config, std::cerr);
      } else if (*assemble) {
        if (!o.input.empty()) config.paths.filtered = o.input;
        if (!o.output.empty()) config.paths.training = o.output;
        report = reer::cli::cmd_assemble(config, std::cerr);
      } else if (*stats) {
        if (!o.input.empty()) config.paths.training = o.input;
        if (!judge_prompts.empty()) config.paths.judge_prompts = judge_prompts;
        report = reer::cli::cmd_stats(config, std::cerr);
      } else if (*score) {
        if (!o.input.empty()) config.paths.synthesis = o.input;
        if (!o.output.empty()) config.paths.scores = o.output;
        report = reer::cli::cmd_score(config, std::cerr);
      }
    }
    std::cout << report.summary.dump(2) << "\n";
    return report.exit_code;
  } catch (const reer::Error& e) {
    std::cerr << "error [" << reer::to_string(e.code()) << "]: " << e.what() << "\n";
    return reer::cli::kExitFatal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return reer::cli::kExitFatal;
  }
}
