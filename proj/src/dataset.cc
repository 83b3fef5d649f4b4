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

#include "guiprobe/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "guiprobe/errors.h"
#include "guiprobe/image_io.h"

namespace guiprobe {

using nlohmann::json;
namespace fs = std::filesystem;

std::size_t EpisodeCorpus::step_count() const {
  std::size_t n = 0;
  for (const Episode& e : episodes) n += e.steps.size();
  return n;
}

std::vector<const Step*> EpisodeCorpus::steps() const {
  std::vector<const Step*> out;
  out.reserve(step_count());
  for (const Episode& e : episodes) {
    for (const Step& s : e.steps) out.push_back(&s);
  }
  return out;
}

const Step* EpisodeCorpus::find(std::string_view sample_id) const {
  for (const Episode& e : episodes) {
    for (const Step& s : e.steps) {
      if (s.sample_id == sample_id) return &s;
    }
  }
  return nullptr;
}

std::vector<Violation> validate_corpus(const EpisodeCorpus& corpus) {
  std::vector<Violation> out;
  if (corpus.episodes.empty()) {
    out.push_back({corpus.name, std::string(rule::kEmptyEpisode),
                   "corpus has no episodes"});
  }
  std::set<std::string> seen;
  for (const Episode& e : corpus.episodes) {
    auto v = validate_episode(e);
    out.insert(out.end(), v.begin(), v.end());
    std::set<std::string> local;
    for (const Step& s : e.steps) {
      if (local.insert(s.sample_id).second && !seen.insert(s.sample_id).second) {
        out.push_back({s.sample_id, std::string(rule::kDuplicateSampleId),
                       "sample_id repeated across episodes"});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Action JSON

json action_to_json(const Action& a) {
  json j = {{"kind", kind_name(kind_of(a))},
            {"x", nullptr},
            {"y", nullptr},
            {"direction", nullptr},
            {"text", nullptr}};
  if (auto p = action_point(a)) {
    j["x"] = p->x;
    j["y"] = p->y;
  }
  if (const auto* s = std::get_if<action::Scroll>(&a)) {
    j["direction"] = direction_name(s->direction);
  }
  if (const std::string* text = action_text(a)) j["text"] = *text;
  return j;
}

Action action_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw LoadError("gt_action lacks a string 'kind'");
  }
  std::string kind_str = j["kind"].get<std::string>();
  auto kind = kind_from_name(kind_str);
  if (!kind) throw LoadError(fmt::format("unknown action kind '{}'", kind_str));
  auto text_field = [&]() {
    if (!j.contains("text") || !j["text"].is_string()) {
      throw LoadError(fmt::format("{} action needs a string 'text'", kind_str));
    }
    return j["text"].get<std::string>();
  };
  switch (*kind) {
    case ActionKind::kClick: {
      // A click without coordinates is kept as an off-screen point; validation
      // reports it as ungroundable unless a region backs it.
      Point p{-1, -1};
      if (j.contains("x") && j["x"].is_number_integer() && j.contains("y") &&
          j["y"].is_number_integer()) {
        p = {j["x"].get<int>(), j["y"].get<int>()};
      } else if (j.contains("x") && !j["x"].is_null()) {
        throw LoadError("click coordinates must be integers");
      }
      return action::Click{p};
    }
    case ActionKind::kScroll: {
      if (!j.contains("direction") || !j["direction"].is_string()) {
        throw LoadError("scroll action needs a string 'direction'");
      }
      auto d = direction_from_name(j["direction"].get<std::string>());
      if (!d) {
        throw LoadError(fmt::format("unknown scroll direction '{}'",
                                    j["direction"].get<std::string>()));
      }
      return action::Scroll{*d};
    }
    case ActionKind::kType:
      return action::TypeText{text_field()};
    case ActionKind::kOpenApp:
      return action::OpenApp{text_field()};
    default:
      return *make_bare_action(*kind);
  }
}

// ---------------------------------------------------------------------------
// Canonical load / write

namespace {

json region_to_json(const std::optional<Region>& r) {
  if (!r) return nullptr;
  return {{"x0", r->x0}, {"y0", r->y0}, {"x1", r->x1}, {"y1", r->y1}};
}

std::optional<Region> region_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return Region{j.at("x0").get<int>(), j.at("y0").get<int>(),
                j.at("x1").get<int>(), j.at("y1").get<int>()};
}

std::string image_name_for(const std::string& sample_id) {
  std::string out;
  for (char c : sample_id) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')
               ? c
               : '_';
  }
  return out + ".png";
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(fmt::format("cannot open {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError(fmt::format("cannot parse {}: {}", path.string(), e.what()));
  }
}

// Groups steps into episodes in first-seen order.
class EpisodeBuilder {
 public:
  Episode& episode_for(const std::string& id, const std::string& goal) {
    auto it = index_.find(id);
    if (it != index_.end()) return episodes_[it->second];
    index_.emplace(id, episodes_.size());
    episodes_.push_back(Episode{id, goal, {}, 0});
    return episodes_.back();
  }

  std::vector<Episode> finish() && {
    for (Episode& e : episodes_) {
      e.max_steps = static_cast<int>(e.steps.size());
    }
    return std::move(episodes_);
  }

 private:
  std::vector<Episode> episodes_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace

EpisodeCorpus load_canonical(const fs::path& dir) {
  fs::path manifest_path = dir / kManifestFile;
  if (!fs::exists(manifest_path)) {
    throw LoadError(fmt::format("missing manifest {}", manifest_path.string()));
  }
  json manifest = read_json_file(manifest_path);
  if (!manifest.is_object() || !manifest.contains("records") ||
      !manifest["records"].is_array()) {
    throw LoadError("manifest must be an object with a 'records' array");
  }

  EpisodeCorpus corpus;
  corpus.name = manifest.value("name", dir.filename().string());
  corpus.platform_tag = manifest.value("platform_tag", "");

  EpisodeBuilder builder;
  std::set<std::string> seen_ids;
  for (const json& rec : manifest["records"]) {
    std::string sample_id = rec.is_object() && rec.contains("sample_id") &&
                                    rec["sample_id"].is_string()
                                ? rec["sample_id"].get<std::string>()
                                : std::string("<unknown>");
    try {
      if (!seen_ids.insert(sample_id).second) {
        throw LoadError("duplicate sample_id");
      }
      Step step;
      step.sample_id = sample_id;
      step.episode_id = rec.at("episode_id").get<std::string>();
      step.step_index = rec.at("step_index").get<int>();
      step.goal = rec.at("goal").get<std::string>();
      if (rec.contains("instruction") && !rec["instruction"].is_null()) {
        step.instruction = rec["instruction"].get<std::string>();
      }
      step.gt_action = action_from_json(rec.at("gt_action"));
      step.gt_region =
          region_from_json(rec.contains("gt_region") ? rec["gt_region"] : json());

      fs::path image_path = dir / rec.at("image_file").get<std::string>();
      if (!fs::exists(image_path)) {
        throw LoadError(
            fmt::format("image file {} does not exist", image_path.string()));
      }
      Screen screen = read_image(image_path);
      int w = rec.at("screen_w").get<int>();
      int h = rec.at("screen_h").get<int>();
      if (screen.width() != w || screen.height() != h) {
        throw LoadError(fmt::format("image {} is {}x{}, manifest says {}x{}",
                                    image_path.string(), screen.width(),
                                    screen.height(), w, h));
      }
      step.screen = std::make_shared<const Screen>(std::move(screen));
      builder.episode_for(step.episode_id, step.goal).steps.push_back(
          std::move(step));
    } catch (const json::exception& e) {
      throw LoadError(fmt::format("sample {}: schema violation: {}", sample_id,
                                  e.what()));
    } catch (const Error& e) {
      throw LoadError(fmt::format("sample {}: {}", sample_id, e.what()));
    }
  }
  corpus.episodes = std::move(builder).finish();

  auto violations = validate_corpus(corpus);
  if (!violations.empty()) {
    const Violation& v = violations.front();
    throw LoadError(fmt::format("sample {}: {} ({}); {} violation(s) total",
                                v.sample_id, v.rule, v.message,
                                violations.size()));
  }
  return corpus;
}

void write_canonical(const EpisodeCorpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  json records = json::array();
  for (const Episode& e : corpus.episodes) {
    for (const Step& s : e.steps) {
      if (!s.screen) {
        throw Error(fmt::format("sample {} has no screen", s.sample_id));
      }
      std::string image_file = image_name_for(s.sample_id);
      write_png(dir / image_file, *s.screen);
      records.push_back({
          {"sample_id", s.sample_id},
          {"episode_id", e.id},
          {"step_index", s.step_index},
          {"goal", s.goal},
          {"instruction", s.instruction ? json(*s.instruction) : json()},
          {"image_file", image_file},
          {"screen_w", s.screen->width()},
          {"screen_h", s.screen->height()},
          {"gt_action", action_to_json(s.gt_action)},
          {"gt_region", region_to_json(s.gt_region)},
      });
    }
  }
  json manifest = {{"name", corpus.name},
                   {"platform_tag", corpus.platform_tag},
                   {"records", std::move(records)}};
  std::ofstream out(dir / kManifestFile);
  out << manifest.dump(1) << "\n";
  if (!out) throw Error(fmt::format("cannot write manifest in {}", dir.string()));
}

// ---------------------------------------------------------------------------
// Adapters

namespace {

// Collects native steps for one adapter run and keeps the dropped-step
// bookkeeping in one place.
class AdapterSink {
 public:
  AdapterSink(std::string prefix, AdaptResult& result)
      : prefix_(std::move(prefix)), result_(result) {}

  void add(const std::string& episode_id, const std::string& goal,
           std::optional<std::string> instruction, ScreenPtr screen,
           std::optional<Action> action, const std::string& native_label) {
    ++result_.native_steps;
    if (!action || check_action(*action)) {
      ++result_.dropped_steps;
      result_.warnings.push_back(
          fmt::format("{}: dropped step {} of episode {} with native action "
                      "'{}' outside the shared action space",
                      prefix_, counters_[episode_id], episode_id,
                      native_label));
      ++counters_[episode_id];
      return;
    }
    ++counters_[episode_id];
    Episode& e = builder_.episode_for(episode_id, goal);
    Step s;
    s.episode_id = episode_id;
    s.step_index = static_cast<int>(e.steps.size());
    s.sample_id = fmt::format("{}/{}/{}", prefix_, episode_id, s.step_index);
    s.goal = goal;
    s.instruction = std::move(instruction);
    s.screen = std::move(screen);
    s.gt_action = std::move(*action);
    e.steps.push_back(std::move(s));
  }

  std::vector<Episode> finish() && { return std::move(builder_).finish(); }

 private:
  std::string prefix_;
  AdaptResult& result_;
  EpisodeBuilder builder_;
  std::unordered_map<std::string, int> counters_;
};

ScreenPtr load_screen(const fs::path& path) {
  return std::make_shared<const Screen>(read_image(path));
}

Point scale_unit(double rx, double ry, ScreenSize size) {
  return {static_cast<int>(std::floor(rx * size.width + 0.5)),
          static_cast<int>(std::floor(ry * size.height + 0.5))};
}

// Swipe gestures are labelled by the direction the content moves into view:
// a finger travelling upward scrolls down.
ScrollDirection swipe_to_scroll(double dx, double dy) {
  if (std::abs(dy) >= std::abs(dx)) {
    return dy < 0 ? ScrollDirection::kDown : ScrollDirection::kUp;
  }
  return dx < 0 ? ScrollDirection::kRight : ScrollDirection::kLeft;
}

std::vector<fs::path> sorted_json_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  return std::nullopt;
}

// episodes.jsonl: {"episode_id", "goal", "screenshots": [file...],
// "actions": [{"action_type", ...}], "step_instructions": [...]}.
void adapt_android_control(const fs::path& path, AdapterSink& sink) {
  fs::path file = path / "episodes.jsonl";
  std::ifstream in(file);
  if (!in) throw LoadError(fmt::format("cannot open {}", file.string()));
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json ep = json::parse(line);
    std::string episode_id = ep.at("episode_id").is_string()
                                 ? ep["episode_id"].get<std::string>()
                                 : ep["episode_id"].dump();
    std::string goal = ep.at("goal").get<std::string>();
    const json& shots = ep.at("screenshots");
    const json& actions = ep.at("actions");
    const json instr =
        ep.contains("step_instructions") ? ep["step_instructions"] : json::array();
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const json& a = actions[i];
      std::string type = a.at("action_type").get<std::string>();
      ScreenPtr screen = load_screen(path / shots.at(i).get<std::string>());
      std::optional<Action> act;
      if (type == "click") {
        act = action::Click{{a.at("x").get<int>(), a.at("y").get<int>()}};
      } else if (type == "scroll") {
        if (auto d = direction_from_name(a.value("direction", ""))) {
          act = action::Scroll{*d};
        }
      } else if (type == "input_text") {
        act = action::TypeText{a.value("text", "")};
      } else if (type == "open_app") {
        act = action::OpenApp{a.value("app_name", "")};
      } else if (type == "navigate_back") {
        act = action::PressBack{};
      } else if (type == "navigate_home") {
        act = action::PressHome{};
      } else if (type == "wait") {
        act = action::Wait{};
      } else if (type == "complete" || type == "status") {
        act = action::Complete{};
      }
      std::optional<std::string> instruction;
      if (i < instr.size() && instr[i].is_string()) {
        instruction = instr[i].get<std::string>();
      }
      sink.add(episode_id, goal, instruction, screen, act, type);
    }
  }
}

// One JSON array of step records per episode file, AITW-style action codes.
void adapt_aitz(const fs::path& path, AdapterSink& sink) {
  constexpr double kTapThreshold = 0.04;
  for (const fs::path& file : sorted_json_files(path)) {
    json steps = read_json_file(file);
    std::vector<json> ordered(steps.begin(), steps.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const json& a, const json& b) {
                       return a.at("step_id").get<int>() <
                              b.at("step_id").get<int>();
                     });
    for (const json& s : ordered) {
      std::string episode_id = s.at("episode_id").get<std::string>();
      std::string goal = s.at("instruction").get<std::string>();
      ScreenPtr screen = load_screen(path / s.at("image_path").get<std::string>());
      int code = s.at("result_action_type").get<int>();
      std::optional<Action> act;
      switch (code) {
        case 3:
          act = action::TypeText{s.value("result_action_text", "")};
          break;
        case 4: {
          // "[y, x]" strings in unit coordinates.
          json touch = json::parse(s.at("result_touch_yx").get<std::string>());
          json lift = json::parse(s.at("result_lift_yx").get<std::string>());
          double ty = touch.at(0).get<double>(), tx = touch.at(1).get<double>();
          double ly = lift.at(0).get<double>(), lx = lift.at(1).get<double>();
          if (std::hypot(lx - tx, ly - ty) <= kTapThreshold) {
            act = action::Click{scale_unit(tx, ty, screen->size())};
          } else {
            act = action::Scroll{swipe_to_scroll(lx - tx, ly - ty)};
          }
          break;
        }
        case 5:
          act = action::PressBack{};
          break;
        case 6:
          act = action::PressHome{};
          break;
        case 7:
          act = action::Enter{};
          break;
        case 10:
          act = action::Complete{};
          break;
        default:
          break;
      }
      sink.add(episode_id, goal, optional_string(s, "coat_action_desc"), screen,
               act, std::to_string(code));
    }
  }
}

// One JSON object per episode file; coordinates on a 0..1000 grid.
void adapt_gui_odyssey(const fs::path& path, AdapterSink& sink) {
  for (const fs::path& file : sorted_json_files(path)) {
    json ep = read_json_file(file);
    std::string episode_id = ep.at("episode_id").get<std::string>();
    std::string goal = ep.at("task_info").at("instruction").get<std::string>();
    for (const json& s : ep.at("steps")) {
      ScreenPtr screen = load_screen(path / s.at("screenshot").get<std::string>());
      std::string type = s.at("action").get<std::string>();
      const json& info = s.contains("info") ? s["info"] : json();
      std::optional<Action> act;
      if (type == "CLICK") {
        Point norm{info.at(0).at(0).get<int>(), info.at(0).at(1).get<int>()};
        act = action::Click{denormalize_point(norm, screen->size())};
      } else if (type == "SCROLL") {
        double dx = info.at(1).at(0).get<double>() - info.at(0).at(0).get<double>();
        double dy = info.at(1).at(1).get<double>() - info.at(0).at(1).get<double>();
        act = action::Scroll{swipe_to_scroll(dx, dy)};
      } else if (type == "TEXT") {
        act = action::TypeText{info.is_string() ? info.get<std::string>() : ""};
      } else if (type == "KEY_BACK") {
        act = action::PressBack{};
      } else if (type == "KEY_HOME") {
        act = action::PressHome{};
      } else if (type == "COMPLETE") {
        act = action::Complete{};
      }
      sink.add(episode_id, goal, optional_string(s, "low_level_instruction"),
               screen, act, type);
    }
  }
}

// data.json: array of {"episode_id", "goal", "steps": [{"image", "action":
// {"name", "point": [rx, ry], "text", "direction"}}]} with unit coordinates.
void adapt_gui_act(const fs::path& path, AdapterSink& sink) {
  json episodes = read_json_file(path / "data.json");
  for (const json& ep : episodes) {
    std::string episode_id = ep.at("episode_id").get<std::string>();
    std::string goal = ep.at("goal").get<std::string>();
    for (const json& s : ep.at("steps")) {
      ScreenPtr screen = load_screen(path / s.at("image").get<std::string>());
      const json& a = s.at("action");
      std::string name = a.at("name").get<std::string>();
      std::optional<Action> act;
      if (name == "click") {
        act = action::Click{scale_unit(a.at("point").at(0).get<double>(),
                                       a.at("point").at(1).get<double>(),
                                       screen->size())};
      } else if (name == "input") {
        act = action::TypeText{a.value("text", "")};
      } else if (name == "scroll") {
        if (auto d = direction_from_name(a.value("direction", ""))) {
          act = action::Scroll{*d};
        }
      } else if (name == "enter") {
        act = action::Enter{};
      } else if (name == "answer" || name == "complete") {
        act = action::Complete{};
      }
      sink.add(episode_id, goal, optional_string(s, "instruction"), screen, act,
               name);
    }
  }
}

// Parses the argument list of a single-line pyautogui call.
std::optional<Action> parse_pyautogui(std::string_view line) {
  line = trim(line);
  auto open = line.find('(');
  auto close = line.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos ||
      close < open) {
    return std::nullopt;
  }
  std::string_view fn = trim(line.substr(0, open));
  std::string_view args = trim(line.substr(open + 1, close - open - 1));
  auto unquote = [](std::string_view s) -> std::optional<std::string> {
    s = trim(s);
    if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') &&
        s.back() == s.front()) {
      return std::string(s.substr(1, s.size() - 2));
    }
    return std::nullopt;
  };
  if (fn == "pyautogui.click") {
    int x = 0, y = 0;
    char comma = 0;
    std::istringstream ss{std::string(args)};
    if (ss >> x >> comma >> y && comma == ',') return action::Click{{x, y}};
    return std::nullopt;
  }
  if (fn == "pyautogui.write" || fn == "pyautogui.typewrite") {
    if (auto s = unquote(args)) return action::TypeText{*s};
    return std::nullopt;
  }
  if (fn == "pyautogui.press") {
    if (auto s = unquote(args); s && (*s == "enter" || *s == "return")) {
      return action::Enter{};
    }
    return std::nullopt;
  }
  if (fn == "pyautogui.scroll") {
    int amount = 0;
    std::istringstream ss{std::string(args)};
    if (ss >> amount && amount != 0) {
      return action::Scroll{amount < 0 ? ScrollDirection::kDown
                                       : ScrollDirection::kUp};
    }
  }
  return std::nullopt;
}

// tasks.json: array of {"id", "task", "image", "script"}; each script line is
// one step on the same screen.
void adapt_omniact(const fs::path& path, AdapterSink& sink) {
  json tasks = read_json_file(path / "tasks.json");
  for (const json& t : tasks) {
    std::string id = t.at("id").is_string() ? t["id"].get<std::string>()
                                            : t["id"].dump();
    std::string goal = t.at("task").get<std::string>();
    ScreenPtr screen = load_screen(path / t.at("image").get<std::string>());
    std::istringstream script(t.at("script").get<std::string>());
    std::string line;
    while (std::getline(script, line)) {
      if (trim(line).empty()) continue;
      sink.add(id, goal, std::nullopt, screen, parse_pyautogui(line),
               std::string(trim(line)));
    }
  }
}

}  // namespace

std::optional<DatasetFormat> dataset_format_from_name(std::string_view name) {
  static const std::pair<std::string_view, DatasetFormat> kNames[] = {
      {"canonical", DatasetFormat::kCanonical},
      {"androidcontrol", DatasetFormat::kAndroidControl},
      {"aitz", DatasetFormat::kAitz},
      {"gui_odyssey", DatasetFormat::kGuiOdyssey},
      {"gui_act", DatasetFormat::kGuiAct},
      {"omniact", DatasetFormat::kOmniAct},
  };
  for (const auto& [n, f] : kNames) {
    if (n == name) return f;
  }
  return std::nullopt;
}

std::string_view dataset_format_name(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::kCanonical:
      return "canonical";
    case DatasetFormat::kAndroidControl:
      return "androidcontrol";
    case DatasetFormat::kAitz:
      return "aitz";
    case DatasetFormat::kGuiOdyssey:
      return "gui_odyssey";
    case DatasetFormat::kGuiAct:
      return "gui_act";
    case DatasetFormat::kOmniAct:
      return "omniact";
  }
  return "unknown";
}

AdaptResult adapt(DatasetFormat format, const fs::path& path) {
  AdaptResult result;
  if (format == DatasetFormat::kCanonical) {
    result.corpus = load_canonical(path);
    result.native_steps = result.corpus.step_count();
    return result;
  }
  std::string prefix(dataset_format_name(format));
  AdapterSink sink(prefix, result);
  try {
    switch (format) {
      case DatasetFormat::kAndroidControl:
        adapt_android_control(path, sink);
        break;
      case DatasetFormat::kAitz:
        adapt_aitz(path, sink);
        break;
      case DatasetFormat::kGuiOdyssey:
        adapt_gui_odyssey(path, sink);
        break;
      case DatasetFormat::kGuiAct:
        adapt_gui_act(path, sink);
        break;
      case DatasetFormat::kOmniAct:
        adapt_omniact(path, sink);
        break;
      case DatasetFormat::kCanonical:
        break;
    }
  } catch (const json::exception& e) {
    throw LoadError(fmt::format("{} native file parse failure under {}: {}",
                                prefix, path.string(), e.what()));
  } catch (const fs::filesystem_error& e) {
    throw LoadError(fmt::format("{}: {}", prefix, e.what()));
  }
  result.corpus.name = fmt::format("{}:{}", prefix, path.filename().string());
  result.corpus.platform_tag =
      format == DatasetFormat::kOmniAct ? "desktop/web" : "mobile";
  result.corpus.episodes = std::move(sink).finish();
  if (auto v = validate_corpus(result.corpus); !v.empty()) {
    throw LoadError(fmt::format("sample {}: {} ({})", v.front().sample_id,
                                v.front().rule, v.front().message));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Probe subsets

std::optional<ProbeFamily> probe_family_from_name(std::string_view name) {
  if (name == "visual") return ProbeFamily::kVisual;
  if (name == "text") return ProbeFamily::kText;
  if (name == "structure") return ProbeFamily::kStructure;
  return std::nullopt;
}

std::string_view probe_family_name(ProbeFamily family) {
  switch (family) {
    case ProbeFamily::kVisual:
      return "visual";
    case ProbeFamily::kText:
      return "text";
    case ProbeFamily::kStructure:
      return "structure";
  }
  return "unknown";
}

bool family_accepts(ProbeFamily family, const Step& step) {
  ActionKind k = kind_of(step.gt_action);
  switch (family) {
    case ProbeFamily::kVisual:
      return k == ActionKind::kClick;
    case ProbeFamily::kText:
      return k == ActionKind::kType || k == ActionKind::kOpenApp;
    case ProbeFamily::kStructure:
      return k == ActionKind::kPressBack || k == ActionKind::kPressHome ||
             k == ActionKind::kWait || k == ActionKind::kComplete ||
             k == ActionKind::kScroll;
  }
  return false;
}

SubsetResult select_probe_subset(const EpisodeCorpus& corpus,
                                 ProbeFamily family,
                                 const BaselineIndex* baseline) {
  SubsetResult result;
  result.corpus.name =
      fmt::format("{}[{}]", corpus.name, probe_family_name(family));
  result.corpus.platform_tag = corpus.platform_tag;
  for (const Episode& e : corpus.episodes) {
    Episode kept{e.id, e.goal, {}, e.max_steps};
    for (const Step& s : e.steps) {
      if (!family_accepts(family, s)) continue;
      if (family == ProbeFamily::kVisual && !click_is_groundable(s)) {
        result.warnings.push_back(fmt::format(
            "sample {}: click without region or point excluded", s.sample_id));
        continue;
      }
      if (baseline != nullptr) {
        auto it = baseline->records.find(s.sample_id);
        if (it == baseline->records.end() || !it->second.sr_ok) continue;
      }
      kept.steps.push_back(s);
    }
    if (!kept.steps.empty()) result.corpus.episodes.push_back(std::move(kept));
  }
  if (result.corpus.episodes.empty()) {
    throw EmptySubsetError(fmt::format(
        "no {} probe samples in corpus '{}'{}", probe_family_name(family),
        corpus.name,
        baseline ? fmt::format(" after baseline filter for agent '{}'",
                               baseline->agent_id)
                 : std::string()));
  }
  return result;
}

std::string corpus_hash(const EpisodeCorpus& corpus) {
  Sha256 h;
  for (const Episode& e : corpus.episodes) {
    for (const Step& s : e.steps) {
      json meta = {{"sample_id", s.sample_id},
                   {"episode_id", e.id},
                   {"step_index", s.step_index},
                   {"goal", s.goal},
                   {"instruction", s.instruction ? json(*s.instruction) : json()},
                   {"gt_action", action_to_json(s.gt_action)},
                   {"gt_region", region_to_json(s.gt_region)}};
      h.update(meta.dump());
      if (s.screen) {
        h.update(fmt::format("{}x{}", s.screen->width(), s.screen->height()));
        const auto px = s.screen->pixels();
        h.update(std::span<const std::uint8_t>(
            reinterpret_cast<const std::uint8_t*>(px.data()),
            px.size() * sizeof(Rgb)));
      }
    }
  }
  return h.hex_digest();
}

}  // namespace guiprobe
