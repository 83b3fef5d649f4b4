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

// Slow, obviously-correct reference implementations used only by tests.
// None of these call into the library's own arithmetic helpers.

#ifndef GUIPROBE_TESTS_ORACLES_H_
#define GUIPROBE_TESTS_ORACLES_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "guiprobe/core.h"

namespace guiprobe::oracle {

// Plain Jacobi relaxation of the discrete Laplace equation inside `region`
// (x0,y0 inclusive, x1,y1 exclusive). Interior starts at zero; off-screen
// neighbours are skipped. Returns per-pixel doubles, row-major over the
// region, three channels each.
inline std::vector<std::array<double, 3>> jacobi_fill(const Screen& s, const Region& r,
                                                      double tol = 1e-7,
                                                      int max_iter = 400000) {
  const int w = r.x1 - r.x0, h = r.y1 - r.y0;
  std::vector<std::array<double, 3>> cur(static_cast<std::size_t>(w * h), {0, 0, 0});
  auto next = cur;
  auto inside = [&](int x, int y) { return x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1; };
  for (int it = 0; it < max_iter; ++it) {
    double change = 0;
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        std::array<double, 3> acc{0, 0, 0};
        int n = 0;
        const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (const auto& p : nb) {
          const int nx = p[0], ny = p[1];
          if (nx < 0 || ny < 0 || nx >= s.width() || ny >= s.height()) continue;
          ++n;
          if (inside(nx, ny)) {
            const auto& v = cur[static_cast<std::size_t>((ny - r.y0) * w + (nx - r.x0))];
            for (int c = 0; c < 3; ++c) acc[c] += v[c];
          } else {
            const Rgb& c = s.at(nx, ny);
            acc[0] += c.r;
            acc[1] += c.g;
            acc[2] += c.b;
          }
        }
        auto& out = next[static_cast<std::size_t>((y - r.y0) * w + (x - r.x0))];
        const auto& old = cur[static_cast<std::size_t>((y - r.y0) * w + (x - r.x0))];
        for (int c = 0; c < 3; ++c) {
          out[c] = acc[c] / n;
          change = std::max(change, std::abs(out[c] - old[c]));
        }
      }
    }
    std::swap(cur, next);
    if (change < tol) break;
  }
  return cur;
}

// Quadrant origin and extent along one axis, straight from the definition:
// the split sits at floor(extent / 2) and the split line belongs to the
// upper half.
inline std::pair<int, int> axis_quadrant(int p, int extent) {
  const int half = extent / 2;
  return p < half ? std::make_pair(0, half) : std::make_pair(half, extent - half);
}

// Exact affine remap by search: the integer r closest to (p - o) * extent / q,
// ties going up.
inline int remap_axis(int p, int extent) {
  const auto [o, q] = axis_quadrant(p, extent);
  const std::int64_t target = std::int64_t{p - o} * extent;  // r * q ~ target
  int best = 0;
  std::int64_t best_err = -1;
  for (int r = 0; r <= extent; ++r) {
    const std::int64_t err2 = std::llabs(2 * (std::int64_t{r} * q - target));
    // err2 == q means an exact half; prefer the larger r by using <=.
    if (best_err < 0 || err2 < best_err || (err2 == best_err && r > best)) {
      best = r;
      best_err = err2;
    }
  }
  return best;
}

inline Point remap(Point p, ScreenSize size) {
  return {remap_axis(p.x, size.width), remap_axis(p.y, size.height)};
}

// Fraction of pairs within gamma, as a percentage rounded half-up to one
// decimal, computed in integers.
inline double vmc_percent(const std::vector<std::pair<Point, Point>>& pairs, int gamma) {
  std::int64_t within = 0;
  for (const auto& [a, b] : pairs) {
    const double d = std::sqrt(double(a.x - b.x) * (a.x - b.x) + double(a.y - b.y) * (a.y - b.y));
    if (d <= gamma) ++within;
  }
  const std::int64_t n = static_cast<std::int64_t>(pairs.size());
  const std::int64_t tenths = (2000 * within + n) / (2 * n);
  return static_cast<double>(tenths) / 10.0;
}

}  // namespace guiprobe::oracle

#endif  // GUIPROBE_TESTS_ORACLES_H_
