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

#include "guiprobe/core.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "guiprobe/errors.h"

namespace guiprobe {
namespace {

constexpr std::array<std::string_view, kNumActionKinds> kKindNames = {
    "click",      "scroll", "type",     "press_back", "press_home",
    "enter",      "complete", "open_app", "wait"};

constexpr std::array<std::string_view, 4> kDirectionNames = {"up", "down",
                                                             "left", "right"};

void check_dimensions(int width, int height) {
  if (width < 2 || height < 2) {
    throw ImageError(
        fmt::format("screen must be at least 2x2, got {}x{}", width, height));
  }
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int normalize_axis(int raw, int extent, char axis) {
  if (raw < 0 || raw > extent) {
    throw CoordinateRangeError(
        axis, fmt::format("{} coordinate {} outside [0, {}]", axis, raw, extent));
  }
  auto v = div_round_half_up(std::int64_t{raw} * kNormalizedExtent, extent);
  return static_cast<int>(std::min<std::int64_t>(v, kNormalizedExtent));
}

int normalize_axis(double raw, int extent, char axis) {
  if (!std::isfinite(raw) || raw < 0.0 || raw > extent) {
    throw CoordinateRangeError(
        axis, fmt::format("{} coordinate {} outside [0, {}]", axis, raw, extent));
  }
  double integral;
  if (std::modf(raw, &integral) == 0.0) {
    return normalize_axis(static_cast<int>(integral), extent, axis);
  }
  double v = std::floor(raw * kNormalizedExtent / extent + 0.5);
  return static_cast<int>(std::clamp(v, 0.0, double{kNormalizedExtent}));
}

}  // namespace

Screen::Screen(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  check_dimensions(width, height);
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

Screen::Screen(int width, int height, std::vector<Rgb> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dimensions(width, height);
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw ImageError(fmt::format("pixel buffer holds {} entries, expected {}x{}",
                                 pixels_.size(), width, height));
  }
}

std::string_view kind_name(ActionKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<ActionKind> kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<ActionKind>(i);
  }
  return std::nullopt;
}

std::string_view direction_name(ScrollDirection d) {
  return kDirectionNames[static_cast<std::size_t>(d)];
}

std::optional<ScrollDirection> direction_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kDirectionNames.size(); ++i) {
    if (kDirectionNames[i] == name) return static_cast<ScrollDirection>(i);
  }
  return std::nullopt;
}

std::optional<Action> make_bare_action(ActionKind kind) {
  switch (kind) {
    case ActionKind::kPressBack:
      return action::PressBack{};
    case ActionKind::kPressHome:
      return action::PressHome{};
    case ActionKind::kEnter:
      return action::Enter{};
    case ActionKind::kComplete:
      return action::Complete{};
    case ActionKind::kWait:
      return action::Wait{};
    default:
      return std::nullopt;
  }
}

const std::string* action_text(const Action& a) {
  if (const auto* t = std::get_if<action::TypeText>(&a)) return &t->text;
  if (const auto* o = std::get_if<action::OpenApp>(&a)) return &o->app_name;
  return nullptr;
}

std::optional<Point> action_point(const Action& a) {
  if (const auto* c = std::get_if<action::Click>(&a)) return c->point;
  return std::nullopt;
}

std::string to_string(const Action& a) {
  std::string name(kind_name(kind_of(a)));
  if (const auto* c = std::get_if<action::Click>(&a)) {
    return fmt::format("{}({},{})", name, c->point.x, c->point.y);
  }
  if (const auto* s = std::get_if<action::Scroll>(&a)) {
    return fmt::format("{}({})", name, direction_name(s->direction));
  }
  if (const std::string* text = action_text(a)) {
    return fmt::format("{}(\"{}\")", name, *text);
  }
  return name;
}

std::optional<std::string> check_action(const Action& a) {
  if (const std::string* text = action_text(a)) {
    if (trim(*text).empty()) {
      return fmt::format("{} text is empty", kind_name(kind_of(a)));
    }
  }
  return std::nullopt;
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\n\r\f\v";
  auto begin = s.find_first_not_of(kSpace);
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(kSpace);
  return s.substr(begin, end - begin + 1);
}

std::int64_t div_round_half_up(std::int64_t num, std::int64_t den) {
  return floor_div(2 * num + den, 2 * den);
}

Point normalize_point(Point raw, ScreenSize size) {
  return {normalize_axis(raw.x, size.width, 'x'),
          normalize_axis(raw.y, size.height, 'y')};
}

Point normalize_point(double raw_x, double raw_y, ScreenSize size) {
  return {normalize_axis(raw_x, size.width, 'x'),
          normalize_axis(raw_y, size.height, 'y')};
}

Action normalize_action(const Action& a, ScreenSize size) {
  if (const auto* c = std::get_if<action::Click>(&a)) {
    return action::Click{normalize_point(c->point, size)};
  }
  return a;
}

Point denormalize_point(Point normalized, ScreenSize size) {
  auto axis = [](int v, int extent, char name) {
    if (v < 0 || v > kNormalizedExtent) {
      throw CoordinateRangeError(
          name, fmt::format("normalized {} coordinate {} outside [0, 1000]",
                            name, v));
    }
    return static_cast<int>(
        div_round_half_up(std::int64_t{v} * extent, kNormalizedExtent));
  };
  return {axis(normalized.x, size.width, 'x'),
          axis(normalized.y, size.height, 'y')};
}

bool click_is_groundable(const Step& step) {
  const auto* click = std::get_if<action::Click>(&step.gt_action);
  if (click == nullptr) return false;
  if (step.gt_region && step.screen &&
      step.gt_region->valid_within(step.screen->size())) {
    return true;
  }
  if (!step.screen) return false;
  const Point p = click->point;
  return p.x >= 0 && p.x <= step.screen->width() && p.y >= 0 &&
         p.y <= step.screen->height();
}

std::vector<Violation> validate_episode(const Episode& e) {
  std::vector<Violation> out;
  auto add = [&out](const std::string& id, std::string_view r,
                    std::string message) {
    out.push_back({id, std::string(r), std::move(message)});
  };

  if (e.steps.empty()) {
    add(e.id, rule::kEmptyEpisode, "episode has no steps");
    return out;
  }
  if (static_cast<int>(e.steps.size()) > e.max_steps) {
    add(e.steps.front().sample_id, rule::kExceedsMaxSteps,
        fmt::format("{} steps exceed max_steps {}", e.steps.size(),
                    e.max_steps));
  }

  std::set<std::string> seen;
  for (std::size_t i = 0; i < e.steps.size(); ++i) {
    const Step& s = e.steps[i];
    if (s.step_index != static_cast<int>(i)) {
      add(s.sample_id, rule::kNonConsecutiveIndex,
          fmt::format("step_index {} at position {}", s.step_index, i));
    }
    if (!seen.insert(s.sample_id).second) {
      add(s.sample_id, rule::kDuplicateSampleId, "sample_id repeated");
    }
    if (s.goal != e.goal) {
      add(s.sample_id, rule::kGoalMismatch, "step goal differs from episode goal");
    }
    if (!s.screen) {
      add(s.sample_id, rule::kMissingScreen, "step has no screen");
    }
    if (auto msg = check_action(s.gt_action)) {
      add(s.sample_id, rule::kInvalidAction, *msg);
    }
    if (s.gt_region && s.screen &&
        !s.gt_region->valid_within(s.screen->size())) {
      const Region& r = *s.gt_region;
      add(s.sample_id, rule::kInvalidRegion,
          fmt::format("region [{},{})x[{},{}) outside {}x{} screen", r.x0,
                      r.x1, r.y0, r.y1, s.screen->width(), s.screen->height()));
    }
    if (kind_of(s.gt_action) == ActionKind::kClick && s.screen &&
        !click_is_groundable(s)) {
      add(s.sample_id, rule::kUngroundableClick,
          "click has neither a region nor an on-screen point");
    }
  }
  return out;
}

}  // namespace guiprobe
