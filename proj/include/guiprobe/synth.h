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

// Deterministic synthetic corpus used by the self-checks and the bundled
// fixture. Screens are drawn procedurally (gradient background, a toolbar,
// a few buttons); click targets always sit on a button near the middle of a
// screen quadrant, at least kSynthCornerMargin normalized units away from
// every screen corner, so zooming moves every target by more than the click
// threshold.

#ifndef GUIPROBE_SYNTH_H_
#define GUIPROBE_SYNTH_H_

#include <cstdint>

#include "guiprobe/dataset.h"

namespace guiprobe {

inline constexpr int kSynthCornerMargin = 200;

struct SynthOptions {
  int episodes = 20;
  std::uint64_t seed = 20;
  ScreenSize screen = {360, 640};
};

EpisodeCorpus make_synthetic_corpus(const SynthOptions& options = {});

}  // namespace guiprobe

#endif  // GUIPROBE_SYNTH_H_
