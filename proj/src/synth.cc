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

#include "guiprobe/synth.h"

#include <array>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "guiprobe/errors.h"

namespace guiprobe {

namespace {

constexpr std::array<std::string_view, 10> kApps = {
    "Clock", "Settings", "Mail", "Maps", "Notes",
    "Calendar", "Music", "Photos", "Weather", "Contacts"};
constexpr std::array<std::string_view, 10> kButtons = {
    "Save", "Search", "Next", "Menu", "Share", "Add", "Done", "Send", "Play", "Edit"};
constexpr std::array<std::string_view, 8> kWords = {
    "groceries", "meeting at noon", "hello world", "weekend trip",
    "pay rent", "call mom", "gym", "book club"};
constexpr std::array<Rgb, 10> kPalette = {{{236, 240, 245}, {250, 244, 230},
                                           {232, 245, 233}, {243, 229, 245},
                                           {227, 242, 253}, {255, 243, 224},
                                           {237, 231, 246}, {224, 247, 250},
                                           {252, 228, 236}, {241, 248, 233}}};

// Step kinds of the five episode scripts, cycled by episode index. Every
// episode ends with Complete.
using K = ActionKind;
const std::array<std::vector<K>, 5> kScripts = {{
    {K::kOpenApp, K::kClick, K::kType, K::kEnter, K::kComplete},
    {K::kClick, K::kScroll, K::kClick, K::kPressBack, K::kComplete},
    {K::kOpenApp, K::kScroll, K::kClick, K::kWait, K::kComplete},
    {K::kPressHome, K::kOpenApp, K::kClick, K::kType, K::kComplete},
    {K::kClick, K::kClick, K::kScroll, K::kComplete},
}};

// mt19937_64 output is fixed by the standard; the distributions are not, so
// draw bounded values by hand to keep the fixture identical everywhere.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  int below(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }
  int between(int lo, int hi) { return lo + below(hi - lo + 1); }
  template <typename T, std::size_t N>
  const T& pick(const std::array<T, N>& a) {
    return a[static_cast<std::size_t>(below(static_cast<int>(N)))];
  }

 private:
  std::mt19937_64 rng_;
};

std::uint8_t clamp8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

void fill_rect(Screen& s, const Region& r, Rgb c) {
  for (int y = std::max(0, r.y0); y < std::min(s.height(), r.y1); ++y) {
    for (int x = std::max(0, r.x0); x < std::min(s.width(), r.x1); ++x) s.at(x, y) = c;
  }
}

void draw_button(Screen& s, const Region& r, Rgb face) {
  fill_rect(s, r, {clamp8(face.r - 70), clamp8(face.g - 70), clamp8(face.b - 70)});
  fill_rect(s, {r.x0 + 2, r.y0 + 2, r.x1 - 2, r.y1 - 2}, face);
  // Label stripe.
  const int mid = (r.y0 + r.y1) / 2;
  fill_rect(s, {r.x0 + 10, mid - 2, r.x1 - 10, mid + 2}, {40, 40, 40});
}

Region button_at(Point p) { return {p.x - 36, p.y - 20, p.x + 36, p.y + 20}; }

Region clip_to(Region r, ScreenSize size) {
  return {std::max(0, r.x0), std::max(0, r.y0), std::min(size.width, r.x1),
          std::min(size.height, r.y1)};
}

Screen draw_screen(Draw& d, ScreenSize size, Rgb bg, const std::optional<Region>& target) {
  Screen s(size.width, size.height);
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const int shade = (y * 40) / size.height + (x * 20) / size.width;
      s.at(x, y) = {clamp8(bg.r - shade), clamp8(bg.g - shade), clamp8(bg.b - shade / 2)};
    }
  }
  fill_rect(s, {0, 0, size.width, 48}, {48, 63, 159});
  for (int i = 0; i < 3; ++i) {
    const Point p{d.between(40, size.width - 40), d.between(70, size.height - 30)};
    draw_button(s, button_at(p), {200, 200, 200});
  }
  if (target) draw_button(s, *target, {66, 165, 245});
  return s;
}

// A click near the middle of a random quadrant, in raw pixels.
Point target_point(Draw& d, ScreenSize size) {
  const int q = d.below(4);
  const int nx = (q % 2 == 0 ? 250 : 750) + d.between(-60, 60);
  const int ny = (q / 2 == 0 ? 250 : 750) + d.between(-60, 60);
  const Point raw = denormalize_point({nx, ny}, size);
  const Point n = normalize_point(raw, size);
  for (Point corner : {Point{0, 0}, Point{1000, 0}, Point{0, 1000}, Point{1000, 1000}}) {
    const double dist = std::hypot(n.x - corner.x, n.y - corner.y);
    if (dist <= kSynthCornerMargin) {
      throw Error(fmt::format("synthetic target ({},{}) too close to a corner", n.x, n.y));
    }
  }
  return raw;
}

}  // namespace

EpisodeCorpus make_synthetic_corpus(const SynthOptions& options) {
  if (options.episodes < 1) throw ConfigError("synthetic corpus needs at least one episode");
  Draw d(options.seed);
  EpisodeCorpus corpus;
  corpus.name = "synthetic20";
  corpus.platform_tag = "synthetic";
  for (int e = 0; e < options.episodes; ++e) {
    const std::string app(kApps[static_cast<std::size_t>(e) % kApps.size()]);
    const std::string word(d.pick(kWords));
    const Rgb bg = kPalette[static_cast<std::size_t>(e) % kPalette.size()];
    Episode ep;
    ep.id = fmt::format("ep{:02d}", e);
    ep.goal = fmt::format("In {}, save an entry named \"{}\"", app, word);
    const auto& script = kScripts[static_cast<std::size_t>(e) % kScripts.size()];
    for (std::size_t i = 0; i < script.size(); ++i) {
      Step s;
      s.episode_id = ep.id;
      s.step_index = static_cast<int>(i);
      s.sample_id = fmt::format("synth/{}/{}", ep.id, i);
      s.goal = ep.goal;
      std::optional<Region> target;
      switch (script[i]) {
        case K::kClick: {
          const Point p = target_point(d, options.screen);
          target = clip_to(button_at(p), options.screen);
          s.gt_action = action::Click{p};
          // Half the clicks carry an explicit element box.
          if (d.below(2) == 0) s.gt_region = target;
          s.instruction = fmt::format("Tap the {} button", d.pick(kButtons));
          break;
        }
        case K::kType:
          s.gt_action = action::TypeText{word};
          s.instruction = fmt::format("Type \"{}\" into the text field", word);
          break;
        case K::kOpenApp:
          s.gt_action = action::OpenApp{app};
          s.instruction = fmt::format("Open the {} app", app);
          break;
        case K::kScroll: {
          const auto dir = static_cast<ScrollDirection>(d.below(4));
          s.gt_action = action::Scroll{dir};
          s.instruction = fmt::format("Scroll {} to see more items", direction_name(dir));
          break;
        }
        case K::kPressBack:
          s.gt_action = action::PressBack{};
          s.instruction = "Go back to the previous screen";
          break;
        case K::kPressHome:
          s.gt_action = action::PressHome{};
          s.instruction = "Return to the home screen";
          break;
        case K::kWait:
          s.gt_action = action::Wait{};
          s.instruction = "Wait for the list to finish loading";
          break;
        case K::kEnter:
          s.gt_action = action::Enter{};
          s.instruction = "Press enter to submit";
          break;
        case K::kComplete:
          s.gt_action = action::Complete{};
          s.instruction = "The entry is saved, finish the task";
          break;
      }
      s.screen = std::make_shared<const Screen>(draw_screen(d, options.screen, bg, target));
      ep.steps.push_back(std::move(s));
    }
    ep.max_steps = static_cast<int>(ep.steps.size());
    corpus.episodes.push_back(std::move(ep));
  }
  return corpus;
}

}  // namespace guiprobe
