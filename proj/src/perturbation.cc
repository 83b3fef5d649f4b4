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

#include "guiprobe/perturbation.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "guiprobe/errors.h"

namespace guiprobe {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 6> kKindNames = {
    "mask", "edit", "zoom", "token_drop", "sentence_sub", "ablate"};

std::uint8_t to_channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

PerturbedStep base_for(const Step& step,
                       std::optional<PerturbationSpec> spec) {
  PerturbedStep out;
  out.base_sample_id = step.sample_id;
  out.spec = spec;
  out.screen = step.screen;
  out.goal = step.goal;
  out.instruction = step.instruction;
  out.remapped_gt = step.gt_action;
  out.remap_note = RemapNote::kIdentity;
  return out;
}

const Screen& require_screen(const Step& step) {
  if (!step.screen) {
    throw PerturbationError(fmt::format("sample {}: step has no screen",
                                        step.sample_id));
  }
  return *step.screen;
}

const std::string& require_instruction(const Step& step) {
  if (!step.instruction || trim(*step.instruction).empty()) {
    throw PerturbationError(fmt::format(
        "sample {}: text probes need a low-level instruction", step.sample_id));
  }
  return *step.instruction;
}

}  // namespace

std::string_view perturbation_kind_name(PerturbationKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<PerturbationKind> perturbation_kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<PerturbationKind>(i);
  }
  return std::nullopt;
}

ProbeFamily family_of(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kMask:
    case PerturbationKind::kEdit:
    case PerturbationKind::kZoom:
      return ProbeFamily::kVisual;
    case PerturbationKind::kTokenDrop:
    case PerturbationKind::kSentenceSub:
      return ProbeFamily::kText;
    case PerturbationKind::kAblate:
      return ProbeFamily::kStructure;
  }
  return ProbeFamily::kVisual;
}

std::string probe_label(const PerturbationSpec& spec) {
  std::string label(perturbation_kind_name(spec.kind));
  if (spec.kind == PerturbationKind::kAblate) {
    label += fmt::format("_v{}_i{}", spec.ablate_keep_visual ? 1 : 0,
                         spec.ablate_keep_instruction ? 1 : 0);
  }
  return label;
}

json spec_to_json(const PerturbationSpec& spec) {
  return {{"kind", perturbation_kind_name(spec.kind)},
          {"mask_block_px", spec.mask_block_px},
          {"fill_rgb", {spec.fill_rgb.r, spec.fill_rgb.g, spec.fill_rgb.b}},
          {"decoy_instruction", spec.decoy_instruction},
          {"token_placeholder", spec.token_placeholder},
          {"ablate_keep_visual", spec.ablate_keep_visual},
          {"ablate_keep_instruction", spec.ablate_keep_instruction}};
}

PerturbationSpec spec_from_json(const json& j) {
  static const std::set<std::string> kKnown = {
      "kind",           "mask_block_px",      "fill_rgb",
      "decoy_instruction", "token_placeholder", "ablate_keep_visual",
      "ablate_keep_instruction"};
  if (!j.is_object()) throw ConfigError("perturbation spec must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!kKnown.contains(key)) {
      throw ConfigError(fmt::format("unknown perturbation field '{}'", key));
    }
  }
  PerturbationSpec spec;
  try {
    auto kind = perturbation_kind_from_name(j.at("kind").get<std::string>());
    if (!kind) {
      throw ConfigError(fmt::format("unknown perturbation kind {}", j["kind"].dump()));
    }
    spec.kind = *kind;
    spec.mask_block_px = j.value("mask_block_px", spec.mask_block_px);
    if (j.contains("fill_rgb")) {
      const json& f = j["fill_rgb"];
      if (!f.is_array() || f.size() != 3) {
        throw ConfigError("fill_rgb must be a three-element array");
      }
      std::array<int, 3> c{};
      for (int i = 0; i < 3; ++i) {
        c[i] = f[i].get<int>();
        if (c[i] < 0 || c[i] > 255) throw ConfigError("fill_rgb channel outside [0,255]");
      }
      spec.fill_rgb = {static_cast<std::uint8_t>(c[0]),
                       static_cast<std::uint8_t>(c[1]),
                       static_cast<std::uint8_t>(c[2])};
    }
    spec.decoy_instruction = j.value("decoy_instruction", spec.decoy_instruction);
    spec.token_placeholder = j.value("token_placeholder", spec.token_placeholder);
    spec.ablate_keep_visual = j.value("ablate_keep_visual", spec.ablate_keep_visual);
    spec.ablate_keep_instruction =
        j.value("ablate_keep_instruction", spec.ablate_keep_instruction);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed perturbation spec: {}", e.what()));
  }
  if (spec.mask_block_px < 1) throw ConfigError("mask_block_px must be >= 1");
  return spec;
}

std::string_view remap_note_name(RemapNote note) {
  switch (note) {
    case RemapNote::kIdentity:
      return "identity";
    case RemapNote::kZoomRemapped:
      return "zoom_remapped";
    case RemapNote::kTargetRemoved:
      return "target_removed";
  }
  return "identity";
}

PerturbedStep identity_step(const Step& step) {
  return base_for(step, std::nullopt);
}

Region derive_target_region(const Step& step, int block_px) {
  const Screen& screen = require_screen(step);
  if (step.gt_region && step.gt_region->valid_within(screen.size())) {
    return *step.gt_region;
  }
  const auto* click = std::get_if<action::Click>(&step.gt_action);
  if (click == nullptr || !click_is_groundable(step) || block_px < 1) {
    throw PerturbationError(fmt::format(
        "sample {}: ungroundable click, no region derivable", step.sample_id));
  }
  const Point p = click->point;
  const int half = block_px / 2;
  Region r{std::max(0, p.x - half), std::max(0, p.y - half),
           std::min(screen.width(), p.x - half + block_px),
           std::min(screen.height(), p.y - half + block_px)};
  if (r.x0 >= r.x1 || r.y0 >= r.y1) {
    throw PerturbationError(fmt::format(
        "sample {}: clipped target region is empty", step.sample_id));
  }
  return r;
}

PerturbedStep mask_object(const Step& step, const PerturbationSpec& spec) {
  const Region region = derive_target_region(step, spec.mask_block_px);
  Screen out = *step.screen;
  for (int y = region.y0; y < region.y1; ++y) {
    for (int x = region.x0; x < region.x1; ++x) out.at(x, y) = spec.fill_rgb;
  }
  PerturbedStep p = base_for(step, spec);
  p.screen = std::make_shared<const Screen>(std::move(out));
  p.remap_note = RemapNote::kTargetRemoved;
  return p;
}

Screen laplace_fill(const Screen& screen, const Region& region,
                    const LaplaceOptions& options) {
  const int w = region.width();
  const int h = region.height();
  if (!region.valid_within(screen.size())) {
    throw PerturbationError("fill region lies outside the screen");
  }

  // Boundary ring: on-screen pixels outside the region that touch it.
  std::array<double, 3> sum{0, 0, 0};
  long ring = 0;
  auto add_ring = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= screen.width() || y >= screen.height()) return;
    const Rgb& c = screen.at(x, y);
    sum[0] += c.r;
    sum[1] += c.g;
    sum[2] += c.b;
    ++ring;
  };
  for (int x = region.x0; x < region.x1; ++x) {
    add_ring(x, region.y0 - 1);
    add_ring(x, region.y1);
  }
  for (int y = region.y0; y < region.y1; ++y) {
    add_ring(region.x0 - 1, y);
    add_ring(region.x1, y);
  }
  if (ring == 0) {
    throw PerturbationError(
        "fill region covers the whole screen; no boundary pixels to "
        "interpolate from");
  }

  std::vector<std::array<double, 3>> field(
      static_cast<std::size_t>(w) * h, {sum[0] / ring, sum[1] / ring, sum[2] / ring});

  auto idx = [w](int lx, int ly) { return static_cast<std::size_t>(ly) * w + lx; };

  // Over-relaxed Gauss-Seidel; the factor is the classic optimum for a w x h
  // Dirichlet rectangle, which only affects speed, not the fixed point.
  const double rho = 0.5 * (std::cos(std::numbers::pi / (w + 1)) +
                            std::cos(std::numbers::pi / (h + 1)));
  const double omega = 2.0 / (1.0 + std::sqrt(std::max(0.0, 1.0 - rho * rho)));

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    double max_change = 0.0;
    for (int ly = 0; ly < h; ++ly) {
      for (int lx = 0; lx < w; ++lx) {
        const int x = region.x0 + lx;
        const int y = region.y0 + ly;
        std::array<double, 3> acc{0, 0, 0};
        int n = 0;
        auto neighbour = [&](int nx, int ny) {
          if (nx < 0 || ny < 0 || nx >= screen.width() || ny >= screen.height()) {
            return;
          }
          if (region.contains(nx, ny)) {
            const auto& v = field[idx(nx - region.x0, ny - region.y0)];
            acc[0] += v[0];
            acc[1] += v[1];
            acc[2] += v[2];
          } else {
            const Rgb& c = screen.at(nx, ny);
            acc[0] += c.r;
            acc[1] += c.g;
            acc[2] += c.b;
          }
          ++n;
        };
        neighbour(x - 1, y);
        neighbour(x + 1, y);
        neighbour(x, y - 1);
        neighbour(x, y + 1);
        auto& v = field[idx(lx, ly)];
        for (int c = 0; c < 3; ++c) {
          const double target = acc[c] / n;
          const double next = v[c] + omega * (target - v[c]);
          max_change = std::max(max_change, std::abs(next - v[c]));
          v[c] = next;
        }
      }
    }
    if (max_change < options.tolerance) break;
  }

  Screen out = screen;
  for (int ly = 0; ly < h; ++ly) {
    for (int lx = 0; lx < w; ++lx) {
      const auto& v = field[idx(lx, ly)];
      if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2])) {
        throw PerturbationError("laplace fill left an unfilled pixel");
      }
      out.at(region.x0 + lx, region.y0 + ly) = {to_channel(v[0]),
                                                 to_channel(v[1]),
                                                 to_channel(v[2])};
    }
  }
  return out;
}

PerturbedStep edit_object(const Step& step, const PerturbationSpec& spec) {
  const Region region = derive_target_region(step, spec.mask_block_px);
  Screen out = laplace_fill(*step.screen, region);
  PerturbedStep p = base_for(step, spec);
  p.screen = std::make_shared<const Screen>(std::move(out));
  p.remap_note = RemapNote::kTargetRemoved;
  return p;
}

Quadrant quadrant_of(Point pixel, ScreenSize size) {
  const int hw = size.width / 2;
  const int hh = size.height / 2;
  const bool right = pixel.x >= hw;
  const bool bottom = pixel.y >= hh;
  Quadrant q;
  q.index = (bottom ? 2 : 0) + (right ? 1 : 0);
  q.bounds = {right ? hw : 0, bottom ? hh : 0, right ? size.width : hw,
              bottom ? size.height : hh};
  return q;
}

Screen crop_and_rescale(const Screen& screen, const Region& crop, ScreenSize size) {
  const int cw = crop.width();
  const int ch = crop.height();
  std::vector<Rgb> pixels(static_cast<std::size_t>(size.width) * size.height);
  for (int v = 0; v < size.height; ++v) {
    double sy = (v + 0.5) * ch / size.height - 0.5;
    sy = std::clamp(sy, 0.0, double(ch - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, ch - 1);
    const double fy = sy - y0;
    for (int u = 0; u < size.width; ++u) {
      double sx = (u + 0.5) * cw / size.width - 0.5;
      sx = std::clamp(sx, 0.0, double(cw - 1));
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, cw - 1);
      const double fx = sx - x0;
      const Rgb& a = screen.at(crop.x0 + x0, crop.y0 + y0);
      const Rgb& b = screen.at(crop.x0 + x1, crop.y0 + y0);
      const Rgb& c = screen.at(crop.x0 + x0, crop.y0 + y1);
      const Rgb& d = screen.at(crop.x0 + x1, crop.y0 + y1);
      auto lerp = [&](std::uint8_t pa, std::uint8_t pb, std::uint8_t pc,
                      std::uint8_t pd) {
        const double top = pa + (pb - pa) * fx;
        const double bot = pc + (pd - pc) * fx;
        return to_channel(top + (bot - top) * fy);
      };
      pixels[static_cast<std::size_t>(v) * size.width + u] = {
          lerp(a.r, b.r, c.r, d.r), lerp(a.g, b.g, c.g, d.g),
          lerp(a.b, b.b, c.b, d.b)};
    }
  }
  return Screen(size.width, size.height, std::move(pixels));
}

Point zoom_remap(Point pixel, const Quadrant& q, ScreenSize size) {
  return {static_cast<int>(div_round_half_up(
              std::int64_t{pixel.x - q.bounds.x0} * size.width, q.bounds.width())),
          static_cast<int>(div_round_half_up(
              std::int64_t{pixel.y - q.bounds.y0} * size.height,
              q.bounds.height()))};
}

Point zoom_unmap(Point zoomed, const Quadrant& q, ScreenSize size) {
  return {q.bounds.x0 + static_cast<int>(div_round_half_up(
                            std::int64_t{zoomed.x} * q.bounds.width(), size.width)),
          q.bounds.y0 + static_cast<int>(div_round_half_up(
                            std::int64_t{zoomed.y} * q.bounds.height(),
                            size.height))};
}

PerturbedStep zoom_in(const Step& step) {
  const Screen& screen = require_screen(step);
  const auto* click = std::get_if<action::Click>(&step.gt_action);
  if (click == nullptr) {
    throw PerturbationError(fmt::format(
        "sample {}: zoom needs a click ground truth", step.sample_id));
  }
  const Point p = click->point;
  if (p.x < 0 || p.y < 0 || p.x >= screen.width() || p.y >= screen.height()) {
    throw PerturbationError(fmt::format(
        "sample {}: click point ({},{}) outside {}x{} screen", step.sample_id,
        p.x, p.y, screen.width(), screen.height()));
  }
  const Quadrant q = quadrant_of(p, screen.size());
  PerturbationSpec spec;
  spec.kind = PerturbationKind::kZoom;
  PerturbedStep out = base_for(step, spec);
  out.screen = std::make_shared<const Screen>(
      crop_and_rescale(screen, q.bounds, screen.size()));
  out.remapped_gt = action::Click{zoom_remap(p, q, screen.size())};
  out.remap_note = RemapNote::kZoomRemapped;
  return out;
}

PerturbedStep drop_leading_token(const Step& step, const PerturbationSpec& spec) {
  std::string_view text = trim(require_instruction(step));
  constexpr std::string_view kSpace = " \t\n\r\f\v";
  const auto end = text.find_first_of(kSpace);
  std::string rest =
      end == std::string_view::npos ? std::string() : std::string(text.substr(end));
  PerturbedStep p = base_for(step, spec);
  p.instruction = spec.token_placeholder + rest;
  return p;
}

PerturbedStep substitute_instruction(const Step& step, const PerturbationSpec& spec) {
  const std::string& original = require_instruction(step);
  if (trim(spec.decoy_instruction).empty()) {
    throw PerturbationError("decoy instruction is empty");
  }
  if (spec.decoy_instruction == original) {
    throw PerturbationError(fmt::format(
        "sample {}: decoy instruction equals the original", step.sample_id));
  }
  PerturbedStep p = base_for(step, spec);
  p.instruction = spec.decoy_instruction;
  return p;
}

PerturbedStep ablate_modalities(const Step& step, const PerturbationSpec& spec) {
  PerturbedStep p = base_for(step, spec);
  if (!spec.ablate_keep_visual) {
    const Screen& screen = require_screen(step);
    p.screen = std::make_shared<const Screen>(screen.width(), screen.height(),
                                              kAblationGray);
  }
  if (!spec.ablate_keep_instruction) p.instruction = std::string();
  return p;
}

PerturbedStep apply_perturbation(const Step& step, const PerturbationSpec& spec) {
  switch (spec.kind) {
    case PerturbationKind::kMask:
      return mask_object(step, spec);
    case PerturbationKind::kEdit:
      return edit_object(step, spec);
    case PerturbationKind::kZoom: {
      PerturbedStep p = zoom_in(step);
      p.spec = spec;
      return p;
    }
    case PerturbationKind::kTokenDrop:
      return drop_leading_token(step, spec);
    case PerturbationKind::kSentenceSub:
      return substitute_instruction(step, spec);
    case PerturbationKind::kAblate:
      return ablate_modalities(step, spec);
  }
  throw PerturbationError("unknown perturbation kind");
}

}  // namespace guiprobe
