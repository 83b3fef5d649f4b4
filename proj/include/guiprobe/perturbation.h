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

// Probe operators. Each one is a pure function from a recorded Step to a
// PerturbedStep carrying the modified observation and the ground truth
// expressed in the perturbed frame.

#ifndef GUIPROBE_PERTURBATION_H_
#define GUIPROBE_PERTURBATION_H_

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "guiprobe/core.h"
#include "guiprobe/dataset.h"

namespace guiprobe {

enum class PerturbationKind { kMask, kEdit, kZoom, kTokenDrop, kSentenceSub, kAblate };

std::string_view perturbation_kind_name(PerturbationKind kind);
std::optional<PerturbationKind> perturbation_kind_from_name(std::string_view name);
ProbeFamily family_of(PerturbationKind kind);

inline constexpr Rgb kAblationGray = {128, 128, 128};

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::kMask;
  int mask_block_px = 50;
  Rgb fill_rgb = {0, 0, 0};
  std::string decoy_instruction = "Click the Amazon APP";
  std::string token_placeholder = "[]";
  bool ablate_keep_visual = true;
  bool ablate_keep_instruction = true;

  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

// Report label: the kind name, plus "_v<0|1>_i<0|1>" for ablations so the
// four modality conditions stay distinguishable.
std::string probe_label(const PerturbationSpec& spec);

// Field names match the struct members. Missing fields take the defaults.
nlohmann::json spec_to_json(const PerturbationSpec& spec);
PerturbationSpec spec_from_json(const nlohmann::json& j);

enum class RemapNote { kIdentity, kZoomRemapped, kTargetRemoved };
std::string_view remap_note_name(RemapNote note);

struct PerturbedStep {
  std::string base_sample_id;
  std::optional<PerturbationSpec> spec;  // empty for the unperturbed step
  ScreenPtr screen;
  std::string goal;
  std::optional<std::string> instruction;
  Action remapped_gt;
  RemapNote remap_note = RemapNote::kIdentity;
};

// The unperturbed observation, used for baseline passes.
PerturbedStep identity_step(const Step& step);

// gt_region when present, else a block_px square centred on the click point
// and clipped to the screen. Throws PerturbationError when neither exists.
Region derive_target_region(const Step& step, int block_px);

PerturbedStep mask_object(const Step& step, const PerturbationSpec& spec);
PerturbedStep edit_object(const Step& step, const PerturbationSpec& spec);
PerturbedStep zoom_in(const Step& step);
PerturbedStep drop_leading_token(const Step& step, const PerturbationSpec& spec);
PerturbedStep substitute_instruction(const Step& step,
                                     const PerturbationSpec& spec);
PerturbedStep ablate_modalities(const Step& step, const PerturbationSpec& spec);

// Dispatches on spec.kind.
PerturbedStep apply_perturbation(const Step& step, const PerturbationSpec& spec);

// Harmonic fill of `region`: the interior is relaxed towards the average of
// its 4-neighbours, seeded with the mean of the boundary ring. Neighbours
// outside the screen are ignored. Throws PerturbationError when the region
// has no boundary pixels.
struct LaplaceOptions {
  double tolerance = 1e-3;
  int max_iterations = 10000;
};
Screen laplace_fill(const Screen& screen, const Region& region,
                    const LaplaceOptions& options = {});

// Quadrant geometry for zooming, using the half-open split at floor(W/2),
// floor(H/2); points on the split lines belong to the higher quadrant.
struct Quadrant {
  Region bounds;
  int index = 0;  // 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right
};
Quadrant quadrant_of(Point pixel, ScreenSize size);

// Bilinear resampling of `crop` back to `size`, rounding half-up.
Screen crop_and_rescale(const Screen& screen, const Region& crop, ScreenSize size);

// (p - origin) * size / quadrant extent, rounded half-up, per axis.
Point zoom_remap(Point pixel, const Quadrant& q, ScreenSize size);
// Inverse of zoom_remap up to rounding.
Point zoom_unmap(Point zoomed, const Quadrant& q, ScreenSize size);

}  // namespace guiprobe

#endif  // GUIPROBE_PERTURBATION_H_
