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

#ifndef GUIPROBE_TESTS_TEST_UTIL_H_
#define GUIPROBE_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "guiprobe/core.h"
#include "guiprobe/dataset.h"
#include "guiprobe/image_io.h"

namespace guiprobe::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("guiprobe_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

inline ScreenPtr solid_screen(int w, int h, Rgb c = {255, 255, 255}) {
  return std::make_shared<const Screen>(w, h, c);
}

inline Step make_step(std::string id, Action gt, ScreenPtr screen = solid_screen(100, 100),
                      std::optional<std::string> instruction = "Tap OK") {
  Step s;
  s.sample_id = id;
  s.episode_id = "e0";
  s.step_index = 0;
  s.screen = std::move(screen);
  s.goal = "Finish the task";
  s.instruction = std::move(instruction);
  s.gt_action = std::move(gt);
  return s;
}

// Single-episode corpus; step indices and episode ids are rewritten.
inline EpisodeCorpus corpus_of(std::vector<Step> steps, std::string episode = "e0") {
  EpisodeCorpus c;
  c.name = "test";
  Episode e;
  e.id = episode;
  e.goal = steps.empty() ? "" : steps.front().goal;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    steps[i].step_index = static_cast<int>(i);
    steps[i].episode_id = episode;
    steps[i].goal = e.goal;
  }
  e.steps = std::move(steps);
  e.max_steps = static_cast<int>(e.steps.size());
  c.episodes.push_back(std::move(e));
  return c;
}

}  // namespace guiprobe::testing

#endif  // GUIPROBE_TESTS_TEST_UTIL_H_
