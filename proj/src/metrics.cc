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

#include "guiprobe/metrics.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "guiprobe/errors.h"

namespace guiprobe {

using nlohmann::json;

namespace {

double percent(std::size_t hits, std::size_t n) {
  return 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

std::int64_t squared_distance(Point a, Point b) {
  const std::int64_t dx = std::int64_t{a.x} - b.x;
  const std::int64_t dy = std::int64_t{a.y} - b.y;
  return dx * dx + dy * dy;
}

}  // namespace

json outcome_to_json(const StepOutcome& o) {
  json j = {{"sample_id", o.sample_id},
            {"type_ok", o.type_ok},
            {"grounding_ok", o.grounding_ok ? json(*o.grounding_ok) : json(nullptr)},
            {"sr_ok", o.sr_ok},
            {"pred_kind", o.pred_kind ? json(kind_name(*o.pred_kind)) : json(nullptr)},
            {"pred_point", nullptr},
            {"parse_failure",
             o.parse_failure ? json(failure_reason_name(*o.parse_failure)) : json(nullptr)},
            {"answered", o.answered}};
  if (o.pred_point) j["pred_point"] = {o.pred_point->x, o.pred_point->y};
  return j;
}

StepOutcome outcome_from_json(const json& j) {
  StepOutcome o;
  o.sample_id = j.at("sample_id").get<std::string>();
  o.type_ok = j.at("type_ok").get<bool>();
  if (!j.at("grounding_ok").is_null()) o.grounding_ok = j["grounding_ok"].get<bool>();
  o.sr_ok = j.at("sr_ok").get<bool>();
  if (!j.at("pred_kind").is_null()) {
    o.pred_kind = kind_from_name(j["pred_kind"].get<std::string>());
  }
  if (!j.at("pred_point").is_null()) {
    o.pred_point = Point{j["pred_point"][0].get<int>(), j["pred_point"][1].get<int>()};
  }
  if (j.contains("parse_failure") && !j["parse_failure"].is_null()) {
    const auto name = j["parse_failure"].get<std::string>();
    for (auto r : {ParseFailureReason::kNoActionFound, ParseFailureReason::kUnknownActionKind,
                   ParseFailureReason::kMalformedArguments}) {
      if (failure_reason_name(r) == name) o.parse_failure = r;
    }
  }
  o.answered = j.at("answered").get<bool>();
  return o;
}

bool match_click(Point pred, Point gt, int threshold) {
  return squared_distance(pred, gt) <= std::int64_t{threshold} * threshold;
}

StepOutcome match_action(std::string sample_id, const ParseOutcome& pred,
                         const Action& gt) {
  StepOutcome o;
  o.sample_id = std::move(sample_id);
  if (!pred.ok()) {
    if (pred.failure) o.parse_failure = pred.failure->reason;
    return o;
  }
  const Action& a = *pred.action;
  o.pred_kind = kind_of(a);
  o.pred_point = action_point(a);
  o.type_ok = kind_of(a) == kind_of(gt);
  if (!o.type_ok) return o;
  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        const T& p = std::get<T>(a);
        if constexpr (std::is_same_v<T, action::Click>) {
          o.grounding_ok = match_click(p.point, g.point);
          o.sr_ok = *o.grounding_ok;
        } else if constexpr (std::is_same_v<T, action::Scroll>) {
          o.sr_ok = p.direction == g.direction;
        } else if constexpr (std::is_same_v<T, action::TypeText>) {
          o.sr_ok = trim(p.text) == trim(g.text);
        } else if constexpr (std::is_same_v<T, action::OpenApp>) {
          o.sr_ok = trim(p.app_name) == trim(g.app_name);
        } else {
          o.sr_ok = true;
        }
      },
      gt);
  return o;
}

StepOutcome unanswered_outcome(std::string sample_id) {
  StepOutcome o;
  o.sample_id = std::move(sample_id);
  o.answered = false;
  return o;
}

MetricRecord aggregate(const std::vector<StepOutcome>& outcomes) {
  if (outcomes.empty()) throw MetricError("cannot aggregate an empty outcome set");
  MetricRecord r;
  r.n = outcomes.size();
  std::size_t type_hits = 0, sr_hits = 0, ground_hits = 0, ground_n = 0;
  for (const StepOutcome& o : outcomes) {
    r.sample_ids.push_back(o.sample_id);
    type_hits += o.type_ok ? 1 : 0;
    sr_hits += o.sr_ok ? 1 : 0;
    if (o.grounding_ok) {
      ++ground_n;
      ground_hits += *o.grounding_ok ? 1 : 0;
    }
    if (!o.answered) ++r.unanswered;
  }
  std::sort(r.sample_ids.begin(), r.sample_ids.end());
  r.type_acc = percent(type_hits, r.n);
  r.sr = percent(sr_hits, r.n);
  if (ground_n > 0) r.grounding_acc = percent(ground_hits, ground_n);
  return r;
}

bool task_success(const std::vector<StepOutcome>& episode) {
  if (episode.empty()) throw MetricError("episode has no outcomes");
  return std::all_of(episode.begin(), episode.end(),
                     [](const StepOutcome& o) { return o.sr_ok; });
}

double aggregate_tsr(const std::vector<std::vector<StepOutcome>>& episodes,
                     const std::vector<std::size_t>& expected_steps) {
  if (episodes.empty()) throw MetricError("no episodes to score");
  if (episodes.size() != expected_steps.size()) {
    throw MetricError("episode count does not match expected step counts");
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    if (episodes[i].size() != expected_steps[i]) {
      throw MetricError(fmt::format("episode {} has {} outcomes for {} steps", i,
                                    episodes[i].size(), expected_steps[i]));
    }
    if (task_success(episodes[i])) ++ok;
  }
  return percent(ok, episodes.size());
}

DeltaP delta_p(const MetricRecord& base, const MetricRecord& perturbed) {
  if (base.sample_ids != perturbed.sample_ids) {
    throw MetricError(fmt::format(
        "delta_p over different sample sets ({} vs {} samples)", base.n, perturbed.n));
  }
  return {base.type_acc - perturbed.type_acc, base.sr - perturbed.sr};
}

std::optional<double> vmc(const std::vector<PointPair>& pairs, int gamma) {
  if (pairs.empty()) return std::nullopt;
  const std::int64_t g2 = std::int64_t{gamma} * gamma;
  std::size_t within = 0;
  for (const auto& [a, b] : pairs) {
    if (squared_distance(a, b) <= g2) ++within;
  }
  return percent(within, pairs.size());
}

VmcBreakdown vmc_breakdown(const std::vector<StepOutcome>& baseline,
                           const std::vector<StepOutcome>& perturbed,
                           const std::vector<ScreenSize>& baseline_screens,
                           const std::vector<ScreenSize>& perturbed_screens,
                           int gamma) {
  if (baseline.size() != perturbed.size() || baseline.size() != baseline_screens.size() ||
      perturbed.size() != perturbed_screens.size()) {
    throw MetricError("vmc inputs have different lengths");
  }
  VmcBreakdown out;
  std::vector<PointPair> pairs;
  const std::int64_t g2 = std::int64_t{gamma} * gamma;
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    if (baseline[i].sample_id != perturbed[i].sample_id) {
      throw MetricError(fmt::format("vmc pairs misaligned at {} / {}", baseline[i].sample_id,
                                    perturbed[i].sample_id));
    }
    ++out.probed;
    const bool both = baseline[i].pred_kind == ActionKind::kClick &&
                      perturbed[i].pred_kind == ActionKind::kClick;
    if (!both) {
      ++out.excluded;
      continue;
    }
    const Point a = denormalize_point(*baseline[i].pred_point, baseline_screens[i]);
    const Point b = denormalize_point(*perturbed[i].pred_point, perturbed_screens[i]);
    pairs.emplace_back(a, b);
    if (squared_distance(a, b) <= g2) {
      ++out.within;
    } else {
      ++out.beyond;
    }
  }
  out.vmc = vmc(pairs, gamma);
  return out;
}

bool is_reflective(ActionKind kind) {
  return kind == ActionKind::kPressBack || kind == ActionKind::kPressHome ||
         kind == ActionKind::kComplete || kind == ActionKind::kWait;
}

double reflection_score(const std::vector<std::optional<ActionKind>>& kinds) {
  if (kinds.empty()) throw MetricError("reflection score over an empty probe set");
  std::size_t hits = 0;
  for (const auto& k : kinds) {
    if (k && is_reflective(*k)) ++hits;
  }
  return percent(hits, kinds.size());
}

double round1(double percent) {
  const double r = std::floor(percent * 10.0 + 0.5 + 1e-9) / 10.0;
  return r == 0.0 ? 0.0 : r;  // no negative zero in reports
}

}  // namespace guiprobe
