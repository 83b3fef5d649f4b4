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

// Scoring and aggregation.
//
// Two distance conventions live here and must not be mixed up:
//  - the click rule works on normalized 0..1000 coordinates, threshold 140;
//  - visual memory consistency works on raw pixels, threshold gamma (50).
// Rates are percentages in [0, 100]. They are kept unrounded internally and
// rounded half-up to one decimal only when reported.

#ifndef GUIPROBE_METRICS_H_
#define GUIPROBE_METRICS_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "guiprobe/codec.h"
#include "guiprobe/core.h"

namespace guiprobe {

inline constexpr int kClickThreshold = 140;  // normalized units
inline constexpr int kDefaultVmcGamma = 50;  // pixels

struct StepOutcome {
  std::string sample_id;
  bool type_ok = false;
  std::optional<bool> grounding_ok;  // gt and prediction are both clicks
  bool sr_ok = false;
  std::optional<Point> pred_point;  // normalized
  std::optional<ActionKind> pred_kind;
  std::optional<ParseFailureReason> parse_failure;
  bool answered = true;
};

nlohmann::json outcome_to_json(const StepOutcome& o);
StepOutcome outcome_from_json(const nlohmann::json& j);

// Inclusive Euclidean threshold on normalized points.
bool match_click(Point pred, Point gt, int threshold = kClickThreshold);

// `gt` is in normalized coordinates.
StepOutcome match_action(std::string sample_id, const ParseOutcome& pred,
                         const Action& gt);
// Outcome for a step whose query never got an answer.
StepOutcome unanswered_outcome(std::string sample_id);

struct MetricRecord {
  std::vector<std::string> sample_ids;  // sorted
  std::size_t n = 0;
  double type_acc = 0.0;
  std::optional<double> grounding_acc;
  double sr = 0.0;
  std::size_t unanswered = 0;
};

// Throws MetricError on empty input.
MetricRecord aggregate(const std::vector<StepOutcome>& outcomes);

// Outcomes of one episode, one per step.
bool task_success(const std::vector<StepOutcome>& episode);

// `episodes` maps each episode to its per-step outcomes; `expected_steps`
// gives how many steps each episode has. Throws MetricError when an episode
// is missing outcomes.
double aggregate_tsr(const std::vector<std::vector<StepOutcome>>& episodes,
                     const std::vector<std::size_t>& expected_steps);

struct DeltaP {
  double delta_p_type = 0.0;
  double delta_p_sr = 0.0;
};

// base - perturbed in percentage points. Throws MetricError when the two
// records do not cover the same sample_ids.
DeltaP delta_p(const MetricRecord& base, const MetricRecord& perturbed);

// Pixel-space pairs (original prediction, perturbed prediction).
using PointPair = std::pair<Point, Point>;

// Percent of pairs within gamma pixels, inclusive; absent for no pairs.
std::optional<double> vmc(const std::vector<PointPair>& pairs, int gamma = kDefaultVmcGamma);

struct VmcBreakdown {
  std::size_t probed = 0;
  std::size_t within = 0;    // both clicks, distance <= gamma
  std::size_t beyond = 0;    // both clicks, distance > gamma
  std::size_t excluded = 0;  // either prediction is not a click
  std::optional<double> vmc;
};

// Pairs up baseline and perturbed outcomes by sample_id (both sequences must
// cover the same ids) and converts to pixels with the given screen sizes.
VmcBreakdown vmc_breakdown(const std::vector<StepOutcome>& baseline,
                           const std::vector<StepOutcome>& perturbed,
                           const std::vector<ScreenSize>& baseline_screens,
                           const std::vector<ScreenSize>& perturbed_screens,
                           int gamma = kDefaultVmcGamma);

bool is_reflective(ActionKind kind);

// Percent of predictions that are PressBack, PressHome, Complete or Wait.
// Unparsed predictions count as non-reflective. Throws MetricError when empty.
double reflection_score(const std::vector<std::optional<ActionKind>>& kinds);

// Half-up to one decimal.
double round1(double percent);

}  // namespace guiprobe

#endif  // GUIPROBE_METRICS_H_
