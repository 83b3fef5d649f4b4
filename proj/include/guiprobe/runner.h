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

// End-to-end probing runs.
//
// Output directory layout:
//   reports/<agent>__<probe>.json   one per (agent, probe)
//   summary.csv                     one row per report
//   run_manifest.json               hashes, report paths, failures, timings
//   perturbed/<agent>/<probe>/      perturbed screens (persist_perturbed)
//
// Everything except the timings in run_manifest.json is a pure function of
// the config, the corpus and the agents' answers.

#ifndef GUIPROBE_RUNNER_H_
#define GUIPROBE_RUNNER_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "guiprobe/gateway.h"
#include "guiprobe/metrics.h"
#include "guiprobe/perturbation.h"

namespace guiprobe {

struct RunConfig {
  std::filesystem::path corpus_path;
  std::string format_id = "canonical";
  std::vector<AgentEndpoint> agents;
  std::vector<PerturbationSpec> probes;
  PromptSetting setting = PromptSetting::kLow;
  bool baseline_filter = true;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::optional<int> max_parallel;  // overrides every endpoint when set
  int agent_parallel = 1;           // agents processed at once
  int history_length = 0;
  bool persist_perturbed = false;
  std::string template_id = "default";
  nlohmann::json decoding = nlohmann::json::object();
  std::vector<std::filesystem::path> grammar_files;
};

// Relative paths inside the JSON resolve against base_dir. Unknown fields
// and violated invariants raise ConfigError.
RunConfig config_from_json(const nlohmann::json& j,
                           const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);
void check_config(const RunConfig& config);

// SHA-256 over the canonical (key-sorted, compact) serialization.
std::string config_hash(const RunConfig& config);

// Flattened view of one report, enough for CSV rows, plots and comparisons.
// Metric values are already rounded; absent metrics are nullopt.
struct ReportSummary {
  std::string agent_id;
  std::string probe;
  std::size_t n = 0;
  std::map<std::string, std::optional<double>> metrics;
  std::size_t unanswered = 0;
};

// Metric names in CSV column order.
const std::vector<std::string>& metric_names();
ReportSummary summary_from_report(const nlohmann::json& report);
std::string summary_csv(const std::vector<ReportSummary>& rows);

struct ReportRef {
  std::string agent_id;
  std::string probe;
  std::filesystem::path path;  // relative to the output directory
};

struct RunFailure {
  std::string agent_id;
  std::string probe;
  std::string reason;
};

struct RunManifest {
  std::string tool_version;
  std::string config_hash;
  std::string corpus_hash;
  std::filesystem::path output_dir;
  std::vector<ReportRef> reports;
  std::vector<RunFailure> failures;
  nlohmann::json timings = nlohmann::json::object();

  bool complete() const { return failures.empty(); }
};

nlohmann::json manifest_to_json(const RunManifest& m);
// Report paths are resolved against the manifest's directory.
RunManifest load_manifest(const std::filesystem::path& path);

inline constexpr std::string_view kManifestName = "run_manifest.json";
inline constexpr std::string_view kSummaryName = "summary.csv";

// Runs every (agent, probe) pair. Per-agent failures are recorded in the
// manifest and the run carries on; configuration or corpus problems throw.
RunManifest run_experiment(const RunConfig& config);

// Plot-ready CSV tables.
//   memory_reasoning.csv: agent_id,probe,delta_p_sr,reasoning
//     reasoning = 1 - delta_p_sr / 100, three decimals
//   vmc_rs.csv: agent_id,probe,vmc,rs
struct PlotTables {
  std::string memory_reasoning;
  std::string vmc_rs;
};
PlotTables emit_plot_data(const std::vector<ReportSummary>& reports);
std::vector<ReportSummary> load_summaries(const RunManifest& manifest);

struct CompareRow {
  std::string agent_id;
  std::string probe;
  std::string metric;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> diff;  // b - a
  bool flagged = false;
};

// Throws ConfigError when the manifests reference different corpora.
std::vector<CompareRow> compare_runs(const RunManifest& a, const RunManifest& b);
std::string compare_csv(const std::vector<CompareRow>& rows);

}  // namespace guiprobe

#endif  // GUIPROBE_RUNNER_H_
