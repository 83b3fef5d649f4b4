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

// Episode corpora: the canonical on-disk layout, adapters for native
// benchmark layouts, and probe-subset selection.
//
// Canonical layout: a directory holding manifest.json plus one lossless image
// per step. manifest.json is
//
//   {"name": ..., "platform_tag": ..., "records": [record, ...]}
//
// with one record per step:
//
//   {"sample_id", "episode_id", "step_index", "goal", "instruction" (nullable),
//    "image_file", "screen_w", "screen_h",
//    "gt_action": {"kind", "x", "y", "direction", "text"},
//    "gt_region": null | {"x0", "y0", "x1", "y1"}}
//
// Records of one episode appear in step order; episodes appear in first-seen
// order. Click coordinates and regions are raw pixels.

#ifndef GUIPROBE_DATASET_H_
#define GUIPROBE_DATASET_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "guiprobe/core.h"

namespace guiprobe {

inline constexpr std::string_view kManifestFile = "manifest.json";

struct EpisodeCorpus {
  std::string name;
  std::string platform_tag;
  std::vector<Episode> episodes;

  std::size_t step_count() const;
  std::vector<const Step*> steps() const;
  const Step* find(std::string_view sample_id) const;
};

struct BaselineRecord {
  bool type_ok = false;
  bool grounding_ok = false;
  bool sr_ok = false;
};

struct BaselineIndex {
  std::string agent_id;
  std::map<std::string, BaselineRecord> records;
};

// Violations of every episode plus corpus-wide sample_id uniqueness.
std::vector<Violation> validate_corpus(const EpisodeCorpus& corpus);

nlohmann::json action_to_json(const Action& a);
// Throws LoadError on an unknown kind or malformed arguments.
Action action_from_json(const nlohmann::json& j);

// Loads and validates a canonical corpus directory. Any violation aborts the
// load with a LoadError naming the offending sample_id or file.
EpisodeCorpus load_canonical(const std::filesystem::path& dir);

// Writes manifest.json and one PNG per step into dir (created if needed).
void write_canonical(const EpisodeCorpus& corpus,
                     const std::filesystem::path& dir);

enum class DatasetFormat {
  kCanonical,
  kAndroidControl,
  kAitz,
  kGuiOdyssey,
  kGuiAct,
  kOmniAct,
};

std::optional<DatasetFormat> dataset_format_from_name(std::string_view name);
std::string_view dataset_format_name(DatasetFormat format);

struct AdaptResult {
  EpisodeCorpus corpus;
  std::size_t native_steps = 0;
  std::size_t dropped_steps = 0;
  std::vector<std::string> warnings;
};

// Converts a native benchmark layout into a canonical corpus. Native actions
// outside the shared action space are dropped and counted. Native layouts
// accepted here are documented in README.md.
AdaptResult adapt(DatasetFormat format, const std::filesystem::path& path);

enum class ProbeFamily { kVisual, kText, kStructure };

std::optional<ProbeFamily> probe_family_from_name(std::string_view name);
std::string_view probe_family_name(ProbeFamily family);
bool family_accepts(ProbeFamily family, const Step& step);

struct SubsetResult {
  EpisodeCorpus corpus;
  std::vector<std::string> warnings;
};

// Keeps the steps eligible for a probe family (and, with a baseline, only
// steps the agent solved). Retained steps keep their original step_index.
// Throws EmptySubsetError when nothing survives.
SubsetResult select_probe_subset(const EpisodeCorpus& corpus,
                                 ProbeFamily family,
                                 const BaselineIndex* baseline = nullptr);

// Content hash over metadata and pixels; independent of on-disk encoding.
std::string corpus_hash(const EpisodeCorpus& corpus);

}  // namespace guiprobe

#endif  // GUIPROBE_DATASET_H_
