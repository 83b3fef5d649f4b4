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

#include <gtest/gtest.h>

#include <cmath>

#include "guiprobe/errors.h"
#include "guiprobe/metrics.h"

namespace guiprobe {
namespace {

ParseOutcome parsed(Action a) {
  ParseOutcome o;
  o.action = std::move(a);
  return o;
}

ParseOutcome failed(ParseFailureReason r) {
  ParseOutcome o;
  o.failure = ParseFailure{r, "..."};
  return o;
}

TEST(MatchClick, Boundaries) {
  EXPECT_TRUE(match_click({500, 500}, {500, 500}));
  EXPECT_FALSE(match_click({600, 600}, {500, 500}));  // 141.42
  EXPECT_TRUE(match_click({598, 598}, {500, 500}));   // 138.59
  EXPECT_TRUE(match_click({640, 500}, {500, 500}));   // exactly 140
  EXPECT_FALSE(match_click({641, 500}, {500, 500}));
  EXPECT_TRUE(match_click({416, 612}, {500, 500}));   // 84-112-140 triangle
}

TEST(MatchAction, ScrollDirectionMustMatch) {
  const StepOutcome o = match_action("s", parsed(action::Scroll{ScrollDirection::kDown}),
                                     action::Scroll{ScrollDirection::kUp});
  EXPECT_TRUE(o.type_ok);
  EXPECT_FALSE(o.sr_ok);
  EXPECT_FALSE(o.grounding_ok.has_value());
}

TEST(MatchAction, TextExactAfterTrim) {
  EXPECT_TRUE(match_action("t", parsed(action::TypeText{"hello"}), action::TypeText{"hello"}).sr_ok);
  EXPECT_TRUE(match_action("t", parsed(action::TypeText{" hello\n"}), action::TypeText{"hello"}).sr_ok);
  EXPECT_FALSE(match_action("t", parsed(action::TypeText{"Hello"}), action::TypeText{"hello"}).sr_ok);
  EXPECT_FALSE(match_action("t", parsed(action::OpenApp{"Mail"}), action::TypeText{"Mail"}).type_ok);
  EXPECT_TRUE(match_action("t", parsed(action::OpenApp{"Mail"}), action::OpenApp{"Mail"}).sr_ok);
}

TEST(MatchAction, ParseFailureScoredWrong) {
  const StepOutcome o = match_action("f", failed(ParseFailureReason::kNoActionFound), action::Wait{});
  EXPECT_FALSE(o.type_ok);
  EXPECT_FALSE(o.sr_ok);
  EXPECT_TRUE(o.answered);
  EXPECT_EQ(o.parse_failure, ParseFailureReason::kNoActionFound);
  const StepOutcome u = unanswered_outcome("u");
  EXPECT_FALSE(u.answered);
  EXPECT_FALSE(u.sr_ok);
}

TEST(MatchAction, ClickGrounding) {
  const StepOutcome near = match_action("c", parsed(action::Click{{550, 550}}), action::Click{{500, 500}});
  EXPECT_TRUE(near.type_ok);
  EXPECT_EQ(near.grounding_ok, true);
  EXPECT_TRUE(near.sr_ok);
  EXPECT_EQ(near.pred_point, (Point{550, 550}));
  const StepOutcome far = match_action("c", parsed(action::Click{{900, 900}}), action::Click{{500, 500}});
  EXPECT_EQ(far.grounding_ok, false);
  EXPECT_FALSE(far.sr_ok);
  const StepOutcome wrong = match_action("c", parsed(action::Wait{}), action::Click{{500, 500}});
  EXPECT_FALSE(wrong.grounding_ok.has_value());
  EXPECT_TRUE(match_action("b", parsed(action::PressBack{}), action::PressBack{}).sr_ok);
}

StepOutcome outcome(std::string id, bool type_ok, bool sr_ok,
                    std::optional<bool> grounding = std::nullopt) {
  StepOutcome o;
  o.sample_id = std::move(id);
  o.type_ok = type_ok;
  o.sr_ok = sr_ok;
  o.grounding_ok = grounding;
  return o;
}

TEST(Aggregate, Examples) {
  const MetricRecord r = aggregate({outcome("a", true, true), outcome("b", true, false),
                                    outcome("c", false, false), outcome("d", false, false)});
  EXPECT_DOUBLE_EQ(r.type_acc, 50.0);
  EXPECT_DOUBLE_EQ(r.sr, 25.0);
  EXPECT_FALSE(r.grounding_acc.has_value());
  EXPECT_EQ(r.sample_ids, (std::vector<std::string>{"a", "b", "c", "d"}));
  const MetricRecord all = aggregate({outcome("a", true, true, true), outcome("b", true, true)});
  EXPECT_DOUBLE_EQ(all.sr, 100.0);
  EXPECT_DOUBLE_EQ(*all.grounding_acc, 100.0);
  EXPECT_THROW(aggregate({}), MetricError);
}

TEST(Aggregate, UnansweredStayInDenominator) {
  const MetricRecord r = aggregate({outcome("a", true, true), unanswered_outcome("b")});
  EXPECT_DOUBLE_EQ(r.sr, 50.0);
  EXPECT_EQ(r.unanswered, 1u);
  EXPECT_EQ(r.n, 2u);
}

TEST(TaskSuccess, Examples) {
  const std::vector<StepOutcome> good = {outcome("1", true, true), outcome("2", true, true),
                                         outcome("3", true, true)};
  std::vector<StepOutcome> bad = good;
  bad[1].sr_ok = false;
  EXPECT_TRUE(task_success(good));
  EXPECT_FALSE(task_success(bad));
  EXPECT_DOUBLE_EQ(aggregate_tsr({good, bad}, {3, 3}), 50.0);
  EXPECT_THROW(aggregate_tsr({good, bad}, {3, 4}), MetricError);
}

MetricRecord record_with_sr(double sr) {
  MetricRecord r;
  r.sample_ids = {"x"};
  r.n = 1;
  r.sr = sr;
  r.type_acc = sr;
  return r;
}

TEST(DeltaP, Examples) {
  EXPECT_DOUBLE_EQ(round1(delta_p(record_with_sr(100.0), record_with_sr(55.2)).delta_p_sr), 44.8);
  EXPECT_DOUBLE_EQ(round1(delta_p(record_with_sr(70.0), record_with_sr(70.0)).delta_p_sr), 0.0);
  EXPECT_DOUBLE_EQ(round1(delta_p(record_with_sr(80.0), record_with_sr(90.0)).delta_p_sr), -10.0);
  MetricRecord other = record_with_sr(1);
  other.sample_ids = {"y"};
  EXPECT_THROW(delta_p(record_with_sr(1), other), MetricError);
}

TEST(Vmc, Examples) {
  EXPECT_DOUBLE_EQ(*vmc({{{5, 5}, {5, 5}}, {{9, 9}, {9, 9}}}), 100.0);
  const std::vector<PointPair> three = {{{0, 0}, {0, 0}}, {{0, 0}, {30, 40}}, {{0, 0}, {51, 0}}};
  EXPECT_DOUBLE_EQ(round1(*vmc(three, 50)), 66.7);
  EXPECT_DOUBLE_EQ(*vmc({{{0, 0}, {50, 50}}}), 0.0);
  EXPECT_FALSE(vmc({}).has_value());
}

TEST(Vmc, BreakdownConvertsToPixelsAndExcludesNonClicks) {
  auto click = [](std::string id, Point p) {
    StepOutcome o = outcome(std::move(id), true, true);
    o.pred_kind = ActionKind::kClick;
    o.pred_point = p;
    return o;
  };
  StepOutcome back = outcome("c", false, false);
  back.pred_kind = ActionKind::kPressBack;
  // 200x200 screens: 100 normalized units = 20 px.
  const std::vector<StepOutcome> base = {click("a", {500, 500}), click("b", {500, 500}),
                                         click("c", {100, 100})};
  const std::vector<StepOutcome> pert = {click("a", {600, 500}), click("b", {800, 500}), back};
  const std::vector<ScreenSize> screens(3, {200, 200});
  const VmcBreakdown b = vmc_breakdown(base, pert, screens, screens);
  EXPECT_EQ(b.probed, 3u);
  EXPECT_EQ(b.within, 1u);
  EXPECT_EQ(b.beyond, 1u);
  EXPECT_EQ(b.excluded, 1u);
  EXPECT_DOUBLE_EQ(*b.vmc, 50.0);
}

TEST(ReflectionScore, Examples) {
  using K = ActionKind;
  EXPECT_DOUBLE_EQ(reflection_score({K::kPressBack, K::kClick, K::kWait, K::kType}), 50.0);
  EXPECT_DOUBLE_EQ(reflection_score({K::kClick, K::kClick}), 0.0);
  EXPECT_DOUBLE_EQ(reflection_score({K::kWait, K::kWait}), 100.0);
  EXPECT_DOUBLE_EQ(reflection_score({K::kComplete, std::nullopt}), 50.0);
  EXPECT_THROW(reflection_score({}), MetricError);
}

TEST(Round1, HalfUpNoNegativeZero) {
  EXPECT_DOUBLE_EQ(round1(66.65), 66.7);
  EXPECT_DOUBLE_EQ(round1(100.0 * 2 / 3), 66.7);
  EXPECT_DOUBLE_EQ(round1(-0.04), 0.0);
  EXPECT_FALSE(std::signbit(round1(-0.04)));
  EXPECT_DOUBLE_EQ(round1(-10.0), -10.0);
}

TEST(Outcome, JsonRoundTrip) {
  StepOutcome o = outcome("id", true, false, false);
  o.pred_point = Point{3, 4};
  o.pred_kind = ActionKind::kClick;
  const StepOutcome back = outcome_from_json(outcome_to_json(o));
  EXPECT_EQ(back.sample_id, "id");
  EXPECT_EQ(back.grounding_ok, false);
  EXPECT_EQ(back.pred_point, (Point{3, 4}));
  EXPECT_EQ(back.pred_kind, ActionKind::kClick);
  const StepOutcome f = outcome_from_json(outcome_to_json(match_action(
      "f", failed(ParseFailureReason::kMalformedArguments), action::Wait{})));
  EXPECT_EQ(f.parse_failure, ParseFailureReason::kMalformedArguments);
}

}  // namespace
}  // namespace guiprobe
