// Copyright 2026 The guiprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// guiprobe command line.
//
//   guiprobe validate <corpus> [--format F]
//   guiprobe run <config.json> [--output-dir D]
//   guiprobe compare <manifest_a> <manifest_b> [--out FILE]
//   guiprobe emit-plots <manifest> [--out DIR]
//   guiprobe adapt <format> <native_path> <out_dir>
//   guiprobe synth <out_dir> [--episodes N] [--seed S]
//   guiprobe serve-reference <corpus> [--port P]
//
// Exit codes: 0 success, 1 the command ran but found problems (violations,
// missing reports, flagged differences), 2 usage or runtime error.

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "guiprobe/dataset.h"
#include "guiprobe/errors.h"
#include "guiprobe/gateway.h"
#include "guiprobe/runner.h"
#include "guiprobe/synth.h"

namespace {

namespace fs = std::filesystem;
using namespace guiprobe;

volatile std::sig_atomic_t g_stop = 0;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  out << text;
}

DatasetFormat parse_format(const std::string& name) {
  auto f = dataset_format_from_name(name);
  if (!f) throw ConfigError(fmt::format("unknown format '{}'", name));
  return *f;
}

int cmd_validate(const std::string& path, const std::string& format) {
  const DatasetFormat f = parse_format(format);
  EpisodeCorpus corpus;
  if (f == DatasetFormat::kCanonical) {
    try {
      corpus = load_canonical(path);
    } catch (const LoadError& e) {
      std::cout << "invalid: " << e.what() << "\n";
      return 1;
    }
  } else {
    AdaptResult r = adapt(f, path);
    for (const auto& w : r.warnings) std::cout << "warning: " << w << "\n";
    std::cout << fmt::format("adapted {} native steps, dropped {}\n", r.native_steps,
                             r.dropped_steps);
    corpus = std::move(r.corpus);
  }
  const auto violations = validate_corpus(corpus);
  for (const auto& v : violations) {
    std::cout << fmt::format("violation [{}] {}: {}\n", v.rule, v.sample_id, v.message);
  }
  std::cout << fmt::format("{}: {} episodes, {} steps, hash {}\n", corpus.name,
                           corpus.episodes.size(), corpus.step_count(), corpus_hash(corpus));
  return violations.empty() ? 0 : 1;
}

int cmd_run(const std::string& config_path, const std::string& output_dir) {
  RunConfig config = load_run_config(config_path);
  if (!output_dir.empty()) config.output_dir = output_dir;
  const RunManifest m = run_experiment(config);
  for (const auto& r : m.reports) {
    std::cout << fmt::format("report  {} / {} -> {}\n", r.agent_id, r.probe, r.path.string());
  }
  for (const auto& f : m.failures) {
    std::cout << fmt::format("FAILED  {} / {}: {}\n", f.agent_id, f.probe, f.reason);
  }
  std::cout << fmt::format("{} reports, {} failures, output in {}\n", m.reports.size(),
                           m.failures.size(), config.output_dir.string());
  return m.complete() ? 0 : 1;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out) {
  const auto rows = compare_runs(load_manifest(a), load_manifest(b));
  const std::string csv = compare_csv(rows);
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_text(out, csv);
  }
  std::size_t flagged = 0;
  for (const auto& r : rows) flagged += r.flagged ? 1 : 0;
  std::cerr << fmt::format("{} rows, {} flagged\n", rows.size(), flagged);
  return flagged == 0 ? 0 : 1;
}

int cmd_emit_plots(const std::string& manifest_path, std::string out) {
  const RunManifest m = load_manifest(manifest_path);
  if (out.empty()) out = (m.output_dir / "plots").string();
  const PlotTables t = emit_plot_data(load_summaries(m));
  write_text(fs::path(out) / "memory_reasoning.csv", t.memory_reasoning);
  write_text(fs::path(out) / "vmc_rs.csv", t.vmc_rs);
  std::cout << "plot tables written to " << out << "\n";
  return 0;
}

int cmd_adapt(const std::string& format, const std::string& path, const std::string& out) {
  AdaptResult r = adapt(parse_format(format), path);
  for (const auto& w : r.warnings) std::cout << "warning: " << w << "\n";
  write_canonical(r.corpus, out);
  std::cout << fmt::format("{} native steps, {} dropped, {} written to {}\n", r.native_steps,
                           r.dropped_steps, r.corpus.step_count(), out);
  return 0;
}

int cmd_synth(const std::string& out, int episodes, std::uint64_t seed) {
  SynthOptions o;
  o.episodes = episodes;
  o.seed = seed;
  const EpisodeCorpus c = make_synthetic_corpus(o);
  write_canonical(c, out);
  std::cout << fmt::format("{} episodes, {} steps written to {}\n", c.episodes.size(),
                           c.step_count(), out);
  return 0;
}

int cmd_serve(const std::string& corpus_path, int port) {
  auto corpus = std::make_shared<const EpisodeCorpus>(load_canonical(corpus_path));
  MockAgentServer server(corpus);
  server.start(port);
  std::cout << fmt::format("serving reference agents on {}\n", server.base_url(""))
            << std::flush;
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe GUI agents for memorized versus grounded behaviour"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GUIPROBE_VERSION);

  std::string path, path_b, format = "canonical", out, output_dir;
  int episodes = 20, port = 0;
  std::uint64_t seed = 20;

  auto* validate = app.add_subcommand("validate", "check a corpus");
  validate->add_option("corpus", path, "corpus directory or native path")->required();
  validate->add_option("--format", format, "dataset format id");

  auto* run = app.add_subcommand("run", "run a probing experiment");
  run->add_option("config", path, "run config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", output_dir, "override output_dir");

  auto* compare = app.add_subcommand("compare", "diff two runs");
  compare->add_option("manifest_a", path)->required()->check(CLI::ExistingFile);
  compare->add_option("manifest_b", path_b)->required()->check(CLI::ExistingFile);
  compare->add_option("--out", out, "write the table here instead of stdout");

  auto* plots = app.add_subcommand("emit-plots", "write plot-ready tables");
  plots->add_option("manifest", path)->required()->check(CLI::ExistingFile);
  plots->add_option("--out", out, "output directory (default <run>/plots)");

  auto* adapt_cmd = app.add_subcommand("adapt", "convert a native dataset");
  adapt_cmd->add_option("format", format)->required();
  adapt_cmd->add_option("native_path", path)->required();
  adapt_cmd->add_option("out_dir", out)->required();

  auto* synth = app.add_subcommand("synth", "write the synthetic fixture corpus");
  synth->add_option("out_dir", out)->required();
  synth->add_option("--episodes", episodes);
  synth->add_option("--seed", seed);

  auto* serve = app.add_subcommand("serve-reference", "serve reference agents over HTTP");
  serve->add_option("corpus", path)->required();
  serve->add_option("--port", port);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(path, format);
    if (run->parsed()) return cmd_run(path, output_dir);
    if (compare->parsed()) return cmd_compare(path, path_b, out);
    if (plots->parsed()) return cmd_emit_plots(path, out);
    if (adapt_cmd->parsed()) return cmd_adapt(format, path, out);
    if (synth->parsed()) return cmd_synth(out, episodes, seed);
    if (serve->parsed()) return cmd_serve(path, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
