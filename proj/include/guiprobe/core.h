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

// Canonical data model shared by every module: screens, regions, the nine
// GUI actions, steps and episodes.
//
// Coordinate frames: a Point is a plain integer pair. Inside a Step (the
// ground truth and its region) points are raw pixels of that step's screen.
// Points produced by the action codec are normalized milli-units in
// [0, 1000] on both axes. Conversion happens through normalize_point() and
// denormalize_point() only.

#ifndef GUIPROBE_CORE_H_
#define GUIPROBE_CORE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace guiprobe {

inline constexpr int kNormalizedExtent = 1000;

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct ScreenSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const ScreenSize&, const ScreenSize&) = default;
};

// Raw-pixel rectangle, half-open on the high side: [x0, x1) x [y0, y1).
struct Region {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool contains(int x, int y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  bool valid_within(ScreenSize size) const {
    return 0 <= x0 && x0 < x1 && x1 <= size.width && 0 <= y0 && y0 < y1 &&
           y1 <= size.height;
  }
  friend bool operator==(const Region&, const Region&) = default;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};
static_assert(sizeof(Rgb) == 3, "pixel buffers are hashed as packed bytes");

// Row-major RGB raster. Both dimensions are at least 2 so the quadrant
// partition used by zooming never degenerates.
class Screen {
 public:
  Screen(int width, int height, Rgb fill = {});
  Screen(int width, int height, std::vector<Rgb> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  ScreenSize size() const { return {width_, height_}; }

  const Rgb& at(int x, int y) const {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  Rgb& at(int x, int y) {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<const Rgb> pixels() const { return pixels_; }

  friend bool operator==(const Screen&, const Screen&) = default;

 private:
  int width_;
  int height_;
  std::vector<Rgb> pixels_;
};

using ScreenPtr = std::shared_ptr<const Screen>;

enum class ScrollDirection { kUp, kDown, kLeft, kRight };

namespace action {

struct Click {
  Point point;
  friend bool operator==(const Click&, const Click&) = default;
};
struct Scroll {
  ScrollDirection direction = ScrollDirection::kDown;
  friend bool operator==(const Scroll&, const Scroll&) = default;
};
struct TypeText {
  std::string text;
  friend bool operator==(const TypeText&, const TypeText&) = default;
};
struct PressBack {
  friend bool operator==(const PressBack&, const PressBack&) = default;
};
struct PressHome {
  friend bool operator==(const PressHome&, const PressHome&) = default;
};
struct Enter {
  friend bool operator==(const Enter&, const Enter&) = default;
};
struct Complete {
  friend bool operator==(const Complete&, const Complete&) = default;
};
struct OpenApp {
  std::string app_name;
  friend bool operator==(const OpenApp&, const OpenApp&) = default;
};
struct Wait {
  friend bool operator==(const Wait&, const Wait&) = default;
};

}  // namespace action

// Alternative order matches ActionKind.
using Action =
    std::variant<action::Click, action::Scroll, action::TypeText,
                 action::PressBack, action::PressHome, action::Enter,
                 action::Complete, action::OpenApp, action::Wait>;

enum class ActionKind {
  kClick,
  kScroll,
  kType,
  kPressBack,
  kPressHome,
  kEnter,
  kComplete,
  kOpenApp,
  kWait,
};

inline constexpr int kNumActionKinds = 9;

inline ActionKind kind_of(const Action& a) {
  return static_cast<ActionKind>(a.index());
}

// Canonical lowercase names: click, scroll, type, press_back, press_home,
// enter, complete, open_app, wait.
std::string_view kind_name(ActionKind kind);
std::optional<ActionKind> kind_from_name(std::string_view name);
std::string_view direction_name(ScrollDirection d);
std::optional<ScrollDirection> direction_from_name(std::string_view name);

// Builds the argument-free variant for kinds that carry no payload.
std::optional<Action> make_bare_action(ActionKind kind);

// Text payload of Type / OpenApp, nullptr otherwise.
const std::string* action_text(const Action& a);
std::optional<Point> action_point(const Action& a);

// Human-readable form, e.g. "click(500,500)" or "type(\"hi\")".
std::string to_string(const Action& a);

// Checks the per-variant invariants; returns a message on violation.
std::optional<std::string> check_action(const Action& a);

std::string_view trim(std::string_view s);

struct Step {
  std::string sample_id;
  std::string episode_id;
  int step_index = 0;
  ScreenPtr screen;
  std::string goal;
  std::optional<std::string> instruction;
  Action gt_action;
  std::optional<Region> gt_region;
};

struct Episode {
  std::string id;
  std::string goal;
  std::vector<Step> steps;
  int max_steps = 0;
};

// Raw pixel -> [0,1000] milli-units, rounding half-up. The raw coordinate may
// equal the screen extent (far edge maps to 1000).
Point normalize_point(Point raw, ScreenSize size);
// Fractional raw coordinates, as emitted by pixel-space dialects.
Point normalize_point(double raw_x, double raw_y, ScreenSize size);
// [0,1000] milli-units -> raw pixel, rounding half-up.
Point denormalize_point(Point normalized, ScreenSize size);
// Clicks get normalized coordinates; other actions pass through.
Action normalize_action(const Action& a, ScreenSize size);

// floor(num / den + 1/2) for den > 0, exact in integer arithmetic.
std::int64_t div_round_half_up(std::int64_t num, std::int64_t den);

struct Violation {
  std::string sample_id;
  std::string rule;
  std::string message;
};

// Rule identifiers reported by validate_episode.
namespace rule {
inline constexpr std::string_view kEmptyEpisode = "empty_episode";
inline constexpr std::string_view kNonConsecutiveIndex = "non_consecutive_index";
inline constexpr std::string_view kExceedsMaxSteps = "exceeds_max_steps";
inline constexpr std::string_view kDuplicateSampleId = "duplicate_sample_id";
inline constexpr std::string_view kMissingScreen = "missing_screen";
inline constexpr std::string_view kInvalidRegion = "invalid_region";
inline constexpr std::string_view kUngroundableClick = "ungroundable_click";
inline constexpr std::string_view kInvalidAction = "invalid_action";
inline constexpr std::string_view kGoalMismatch = "goal_mismatch";
}  // namespace rule

std::vector<Violation> validate_episode(const Episode& e);

// True when a click can seed a region: inside the screen or backed by a
// ground-truth region.
bool click_is_groundable(const Step& step);

}  // namespace guiprobe

#endif  // GUIPROBE_CORE_H_
