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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any failed.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "guiprobe/codec.h"
#include "guiprobe/dataset.h"
#include "guiprobe/gateway.h"
#include "guiprobe/image_io.h"
#include "guiprobe/metrics.h"
#include "guiprobe/perturbation.h"
#include "guiprobe/runner.h"
#include "oracles/oracles.h"
#include "test_util.h"

#ifndef GUIPROBE_FIXTURE_DIR
#error "GUIPROBE_FIXTURE_DIR must be defined"
#endif
#ifndef GUIPROBE_CLI_PATH
#error "GUIPROBE_CLI_PATH must be defined"
#endif

namespace guiprobe {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

const fs::path kFixtureDir = GUIPROBE_FIXTURE_DIR;

// Thrown by expect(); carries the first broken expectation.
struct Broken : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Broken(what);
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int randint(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

PerturbationSpec spec_of(PerturbationKind k) {
  PerturbationSpec s;
  s.kind = k;
  return s;
}

PerturbationSpec ablate(bool v, bool i) {
  PerturbationSpec s = spec_of(PerturbationKind::kAblate);
  s.ablate_keep_visual = v;
  s.ablate_keep_instruction = i;
  return s;
}

std::vector<PerturbationSpec> six_probes() {
  return {spec_of(PerturbationKind::kMask),      spec_of(PerturbationKind::kEdit),
          spec_of(PerturbationKind::kZoom),      spec_of(PerturbationKind::kTokenDrop),
          spec_of(PerturbationKind::kSentenceSub), ablate(false, false)};
}

AgentEndpoint endpoint(std::string base_url, std::string model, std::string dialect) {
  AgentEndpoint e;
  e.base_url = std::move(base_url);
  e.model_name = std::move(model);
  e.dialect_id = std::move(dialect);
  e.max_parallel = 4;
  return e;
}

std::map<std::pair<std::string, std::string>, ReportSummary> summaries_by_key(
    const RunManifest& m) {
  std::map<std::pair<std::string, std::string>, ReportSummary> out;
  for (auto& s : load_summaries(m)) out[{s.agent_id, s.probe}] = s;
  return out;
}

double metric(const std::map<std::pair<std::string, std::string>, ReportSummary>& t,
              const std::string& agent, const std::string& probe, const std::string& name) {
  auto it = t.find({agent, probe});
  expect(it != t.end(), fmt::format("missing report {}/{}", agent, probe));
  const auto& v = it->second.metrics.at(name);
  expect(v.has_value(), fmt::format("{}/{} has no {}", agent, probe, name));
  return *v;
}

// 1 ------------------------------------------------------------------------
std::string mask_exactness() {
  std::mt19937_64 rng(1);
  const auto start = Clock::now();
  for (int i = 0; i < 1000; ++i) {
    const int w = randint(rng, 2, 320), h = randint(rng, 2, 320);
    std::vector<Rgb> px(static_cast<std::size_t>(w) * h);
    for (Rgb& c : px) {
      const auto v = rng();
      c = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
           static_cast<std::uint8_t>(v >> 16)};
    }
    auto screen = std::make_shared<const Screen>(w, h, std::move(px));
    PerturbationSpec spec = spec_of(PerturbationKind::kMask);
    spec.mask_block_px = randint(rng, 1, 120);
    spec.fill_rgb = {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
                     static_cast<std::uint8_t>(rng())};
    const Point p{randint(rng, 0, w - 1), randint(rng, 0, h - 1)};
    Step step = testing::make_step("m", action::Click{p}, screen);
    // Expected footprint, written out longhand.
    int x0 = p.x - spec.mask_block_px / 2, y0 = p.y - spec.mask_block_px / 2;
    int x1 = x0 + spec.mask_block_px, y1 = y0 + spec.mask_block_px;
    if (rng() % 2 == 0) {
      x0 = randint(rng, 0, w - 1);
      y0 = randint(rng, 0, h - 1);
      x1 = randint(rng, x0 + 1, w);
      y1 = randint(rng, y0 + 1, h);
      step.gt_region = Region{x0, y0, x1, y1};
    }
    const PerturbedStep out = mask_object(step, spec);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const bool in = x >= x0 && x < x1 && y >= y0 && y < y1;
        const Rgb want = in ? spec.fill_rgb : screen->at(x, y);
        if (!(out.screen->at(x, y) == want)) {
          throw Broken(fmt::format("fixture {}: pixel ({},{}) wrong", i, x, y));
        }
      }
    }
  }
  const double t = seconds_since(start);
  expect(t < 10.0, fmt::format("took {:.2f}s", t));
  return fmt::format("1000 fixtures exact, {:.2f}s", t);
}

// 2 ------------------------------------------------------------------------
std::string edit_oracle() {
  const auto start = Clock::now();
  double worst = 0.0;
  auto compare = [&](const Screen& scr, const Region& r, bool analytic_gradient) {
    Step step = testing::make_step("e", action::Click{{r.x0, r.y0}},
                                   std::make_shared<const Screen>(scr));
    step.gt_region = r;
    const PerturbedStep out = edit_object(step, spec_of(PerturbationKind::kEdit));
    const auto ref = oracle::jacobi_fill(scr, r);
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        const auto& want = ref[static_cast<std::size_t>((y - r.y0) * r.width() + (x - r.x0))];
        const Rgb got = out.screen->at(x, y);
        const double d = std::max({std::abs(got.r - want[0]), std::abs(got.g - want[1]),
                                   std::abs(got.b - want[2])});
        worst = std::max(worst, d);
        expect(d <= 1.0, fmt::format("pixel ({},{}) off by {:.3f}", x, y, d));
        if (analytic_gradient) {
          expect(std::abs(want[0] - 3.0 * x) < 0.5, "oracle disagrees with the analytic ramp");
        }
      }
    }
  };
  Screen ramp(80, 48);
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 80; ++x) {
      ramp.at(x, y) = {static_cast<std::uint8_t>(3 * x), static_cast<std::uint8_t>(2 * y), 77};
    }
  }
  compare(ramp, {30, 14, 40, 24}, true);
  compare(ramp, {5, 5, 45, 30}, true);
  // Touches the screen edge: off-screen neighbours drop out, so the ramp is
  // no longer the exact solution there. Oracle comparison only.
  compare(ramp, {0, 0, 12, 12}, false);
  Screen checker(64, 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const bool on = ((x / 4) + (y / 4)) % 2 == 0;
      checker.at(x, y) = on ? Rgb{250, 10, 128} : Rgb{5, 240, 60};
    }
  }
  compare(checker, {20, 20, 36, 36}, false);
  compare(checker, {3, 41, 29, 61}, false);
  const double t = seconds_since(start);
  expect(t < 30.0, fmt::format("took {:.2f}s", t));
  return fmt::format("worst deviation {:.3f}, {:.2f}s", worst, t);
}

// 3 ------------------------------------------------------------------------
std::string zoom_oracle() {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    const ScreenSize size{randint(rng, 2, 2000), randint(rng, 2, 2000)};
    const Point p{randint(rng, 0, size.width - 1), randint(rng, 0, size.height - 1)};
    const Quadrant q = quadrant_of(p, size);
    const Point got = zoom_remap(p, q, size);
    const Point want = oracle::remap(p, size);
    expect(got == want, fmt::format("{}x{} ({},{}) -> ({},{}), oracle ({},{})", size.width,
                                    size.height, p.x, p.y, got.x, got.y, want.x, want.y));
    const Point back = zoom_unmap(got, q, size);
    expect(std::abs(back.x - p.x) <= 1 && std::abs(back.y - p.y) <= 1,
           fmt::format("unmap of ({},{}) gave ({},{})", p.x, p.y, back.x, back.y));
  }
  return "10000 triples exact, inverse within 1px";
}

// 4 ------------------------------------------------------------------------
std::string click_rule() {
  expect(match_click({598, 598}, {500, 500}), "138.59 should pass");
  expect(!match_click({600, 600}, {500, 500}), "141.42 should fail");
  expect(match_click({640, 500}, {500, 500}), "140.00 should pass");
  expect(match_click({500, 360}, {500, 500}), "140.00 (vertical) should pass");
  expect(!match_click({641, 500}, {500, 500}), "141.00 should fail");
  return "138.59 pass, 141.42 fail, 140.00 pass";
}

// 5 ------------------------------------------------------------------------
std::string vmc_oracle() {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const int n = randint(rng, 1, 60);
    std::vector<PointPair> pairs;
    for (int k = 0; k < n; ++k) {
      const Point a{randint(rng, 0, 1200), randint(rng, 0, 2400)};
      Point b{a.x + randint(rng, -60, 60), a.y + randint(rng, -60, 60)};
      if (rng() % 4 == 0) b = {a.x + 30, a.y + 40};  // exactly gamma
      pairs.push_back({a, b});
    }
    const double got = round1(*vmc(pairs, 50));
    const double want = oracle::vmc_percent(pairs, 50);
    expect(got == want, fmt::format("set {}: {} vs oracle {}", i, got, want));
  }
  return "1000 sets match";
}

// 6 ------------------------------------------------------------------------
std::string delta_p_convention() {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 500; ++i) {
    const int n = randint(rng, 1, 200);
    std::vector<StepOutcome> base, pert;
    int hits = 0;
    for (int k = 0; k < n; ++k) {
      StepOutcome b;
      b.sample_id = fmt::format("s{:04d}", k);
      b.type_ok = b.sr_ok = true;
      base.push_back(b);
      StepOutcome p = b;
      p.sr_ok = rng() % 3 != 0;
      p.type_ok = p.sr_ok || rng() % 2 == 0;
      hits += p.sr_ok;
      pert.push_back(p);
    }
    const MetricRecord rb = aggregate(base), rp = aggregate(pert);
    const DeltaP d = delta_p(rb, rp);
    expect(rb.sr == 100.0, "filtered baseline is not 100");
    expect(d.delta_p_sr == 100.0 - rp.sr, "delta is not 100 - perturbed");
    // Integer cross-check of the rounded value.
    const std::int64_t misses = n - hits;
    const std::int64_t tenths = (2000 * misses + n) / (2 * n);
    expect(round1(d.delta_p_sr) == static_cast<double>(tenths) / 10.0,
           fmt::format("rounding: {} vs {}/10", round1(d.delta_p_sr), tenths));
  }
  // Identity: with every modality kept, a deterministic agent answers as it
  // did at baseline.
  testing::TempDir tmp;
  RunConfig c;
  c.corpus_path = kFixtureDir / "synthetic20";
  c.agents = {endpoint("reference:random_agent", "random_agent", "funcall"),
              endpoint("reference:memory_oracle", "memory_oracle", "json")};
  c.probes = {ablate(true, true)};
  c.baseline_filter = false;
  c.output_dir = tmp.path() / "identity";
  c.seed = 11;
  const RunManifest m = run_experiment(c);
  expect(m.complete(), "identity run incomplete");
  for (const auto& s : load_summaries(m)) {
    for (const char* name : {"delta_p_sr", "delta_p_type"}) {
      const auto v = s.metrics.at(name);
      expect(v && *v == 0.0 && !std::signbit(*v),
             fmt::format("{} {} = {}", s.agent_id, name, v ? *v : -1));
    }
  }
  return "500 synthetic sets exact; identity gives 0.0";
}

// 7 ------------------------------------------------------------------------
std::string reference_separation() {
  const auto start = Clock::now();
  const fs::path corpus_dir = kFixtureDir / "synthetic20";
  auto corpus = std::make_shared<const EpisodeCorpus>(load_canonical(corpus_dir));
  expect(corpus->episodes.size() == 20, "fixture does not have 20 episodes");
  MockAgentServer server(corpus);
  server.start();
  testing::TempDir tmp;
  RunConfig c;
  c.corpus_path = corpus_dir;
  c.agents = {endpoint(server.base_url("memory_oracle"), "memory_oracle", "json"),
              endpoint(server.base_url("reasoner_oracle"), "reasoner_oracle", "keyword"),
              endpoint(server.base_url("random_agent"), "random_agent", "funcall")};
  c.probes = six_probes();
  c.baseline_filter = false;
  c.output_dir = tmp.path() / "e2e";
  c.seed = 7;
  c.agent_parallel = 3;
  const RunManifest m = run_experiment(c);
  server.stop();
  expect(m.complete(), "run recorded failures");
  expect(m.reports.size() == 18, fmt::format("{} reports", m.reports.size()));
  expect(server.requests_served() > 0, "mock server saw no traffic");
  const auto t = summaries_by_key(m);
  expect(metric(t, "memory_oracle", "mask", "vmc") == 100.0, "memory mask VMC != 100");
  expect(metric(t, "memory_oracle", "mask", "rs") == 0.0, "memory mask RS != 0");
  expect(metric(t, "memory_oracle", "zoom", "delta_p_sr") == 100.0, "memory zoom dP != 100");
  expect(metric(t, "reasoner_oracle", "mask", "rs") == 100.0, "reasoner mask RS != 100");
  expect(metric(t, "reasoner_oracle", "zoom", "delta_p_sr") == 0.0, "reasoner zoom dP != 0");
  const double sub = metric(t, "reasoner_oracle", "sentence_sub", "delta_p_sr");
  expect(sub > 0.0, "reasoner sentence_sub dP not > 0");
  const double secs = seconds_since(start);
  expect(secs < 60.0, fmt::format("took {:.1f}s", secs));
  return fmt::format("18 reports over HTTP ({} requests), reasoner sentence_sub dP {:.1f}, {:.1f}s",
                     server.requests_served(), sub, secs);
}

// 8 ------------------------------------------------------------------------
std::string cli_determinism() {
  testing::TempDir tmp;
  const fs::path config = kFixtureDir / "run_config.json";
  std::vector<std::string> digests;
  for (const char* name : {"first", "second"}) {
    const fs::path out = tmp.path() / name;
    const std::string cmd = fmt::format("\"{}\" run \"{}\" --output-dir \"{}\" > \"{}\" 2>&1",
                                        GUIPROBE_CLI_PATH, config.string(), out.string(),
                                        (tmp.path() / (std::string(name) + ".log")).string());
    const int rc = std::system(cmd.c_str());
    expect(rc == 0, fmt::format("run exited with {}", rc));
    Sha256 h;
    h.update(slurp(out / kSummaryName));
    std::vector<fs::path> reports;
    for (const auto& e : fs::directory_iterator(out / "reports")) reports.push_back(e.path());
    std::sort(reports.begin(), reports.end());
    expect(reports.size() == 18, fmt::format("{} report files", reports.size()));
    for (const auto& r : reports) {
      h.update(r.filename().string());
      h.update(slurp(r));
    }
    digests.push_back(h.hex_digest());
  }
  expect(digests[0] == digests[1], "digests differ");
  return "sha256 " + digests[0].substr(0, 16);
}

// 9 ------------------------------------------------------------------------
std::vector<Action> boundary_actions() {
  std::vector<Action> out;
  for (Point p : {Point{0, 0}, Point{1000, 1000}, Point{0, 1000}, Point{1000, 0}, Point{500, 500},
                  Point{1, 999}}) {
    out.push_back(action::Click{p});
  }
  for (int d = 0; d < 4; ++d) out.push_back(action::Scroll{static_cast<ScrollDirection>(d)});
  for (std::string t : {"x", "a\"b", "it's", "tab\there", "new\nline", "back\\slash", "}{)(",
                        "Action: WAIT", "DONE", "naïve"}) {
    out.push_back(action::TypeText{t});
    out.push_back(action::OpenApp{t});
  }
  for (int k = 0; k < kNumActionKinds; ++k) {
    if (auto a = make_bare_action(static_cast<ActionKind>(k))) out.push_back(*a);
  }
  return out;
}

std::string codec_totality() {
  DialectRegistry reg = DialectRegistry::with_builtins();
  reg.add(load_grammar_dialect(kFixtureDir / "grammars" / "example.json"));
  std::vector<std::shared_ptr<const Dialect>> dialects;
  for (const auto& id : reg.ids()) dialects.push_back(reg.share(id));

  std::size_t round_trips = 0;
  const std::vector<ScreenSize> screens = {{1000, 1000}, {1080, 2400}, {360, 640}, {3, 7}};
  std::vector<std::string> seeds;
  for (const auto& d : dialects) {
    for (const ScreenSize s : screens) {
      for (const Action& a : boundary_actions()) {
        const std::string text = serialize_action(a, *d, s);
        seeds.push_back(text);
        const ParseOutcome o = parse_action(text, *d, s);
        expect(o.ok() && *o.action == a,
               fmt::format("{} round trip failed for {}: {}", d->id(), to_string(a), text));
        ++round_trips;
      }
    }
  }

  std::mt19937_64 rng(9);
  const std::string alphabet =
      "{}[]()<>\"'\\:,=._- \n\t0123456789eE+xyXYclickCLICKscrollTAPBACKWAITthought\xc3\xa9\xff";
  std::size_t parsed_ok = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string s;
    if (i % 2 == 0) {
      s.resize(rng() % 96);
      for (char& c : s) c = alphabet[rng() % alphabet.size()];
    } else {
      // Mutate a valid serialization.
      s = seeds[rng() % seeds.size()];
      const int edits = randint(rng, 1, 4);
      for (int e = 0; e < edits && !s.empty(); ++e) {
        const std::size_t at = rng() % s.size();
        switch (rng() % 3) {
          case 0: s.erase(at, 1); break;
          case 1: s.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
          default: s[at] = alphabet[rng() % alphabet.size()]; break;
        }
      }
    }
    const auto& d = *dialects[static_cast<std::size_t>(i) % dialects.size()];
    ParseOutcome o;
    try {
      o = parse_action(s, d, screens[static_cast<std::size_t>(i) % screens.size()]);
    } catch (const std::exception& e) {
      throw Broken(fmt::format("{} threw on case {}: {}", d.id(), i, e.what()));
    }
    expect(o.ok() != o.failure.has_value(), "outcome is neither success nor failure");
    if (o.ok()) {
      ++parsed_ok;
      expect(!check_action(*o.action).has_value(), "parsed an invalid action");
      if (auto p = action_point(*o.action)) {
        expect(p->x >= 0 && p->x <= 1000 && p->y >= 0 && p->y <= 1000, "point out of range");
      }
    }
  }
  return fmt::format("{} round trips over {} dialects; 100000 fuzz cases ({} parsed)",
                     round_trips, dialects.size(), parsed_ok);
}

// 10 -----------------------------------------------------------------------
std::string ablation_matrix() {
  testing::TempDir tmp;
  RunConfig c;
  c.corpus_path = kFixtureDir / "synthetic20";
  c.agents = {endpoint("reference:memory_oracle", "memory_oracle", "json"),
              endpoint("reference:reasoner_oracle", "reasoner_oracle", "keyword")};
  c.probes = {ablate(true, true), ablate(true, false), ablate(false, true), ablate(false, false)};
  c.output_dir = tmp.path() / "ablate";
  c.seed = 7;
  const RunManifest m = run_experiment(c);
  expect(m.complete(), "ablation run incomplete");
  expect(m.reports.size() == 8, "expected 8 reports");
  std::set<std::string> files;
  for (const auto& r : m.reports) files.insert(r.path.generic_string());
  expect(files.size() == 8, "report files are not distinct");
  const auto t = summaries_by_key(m);
  const std::vector<std::string> labels = {"ablate_v1_i1", "ablate_v1_i0", "ablate_v0_i1",
                                           "ablate_v0_i0"};
  std::vector<double> mem, rea;
  for (const auto& l : labels) {
    mem.push_back(metric(t, "memory_oracle", l, "sr"));
    rea.push_back(metric(t, "reasoner_oracle", l, "sr"));
  }
  for (double v : mem) expect(v == mem[0], "memory_oracle conditions differ");
  expect(mem.back() <= mem.front(), "memory (F,F) above (T,T)");
  for (std::size_t i = 1; i < rea.size(); ++i) {
    expect(rea[i] < rea[i - 1], fmt::format("reasoner not strictly ordered: {} !< {}", rea[i],
                                            rea[i - 1]));
  }
  return fmt::format("memory SR {:.1f} x4; reasoner SR {:.1f} > {:.1f} > {:.1f} > {:.1f}", mem[0],
                     rea[0], rea[1], rea[2], rea[3]);
}

}  // namespace
}  // namespace guiprobe

int main() {
  using guiprobe::Broken;
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
      {"mask bit-exactness", guiprobe::mask_exactness},
      {"edit matches relaxation oracle", guiprobe::edit_oracle},
      {"zoom remap matches oracle", guiprobe::zoom_oracle},
      {"click rule boundaries", guiprobe::click_rule},
      {"VMC matches brute-force count", guiprobe::vmc_oracle},
      {"delta-P convention", guiprobe::delta_p_convention},
      {"reference-agent separation end to end", guiprobe::reference_separation},
      {"CLI runs are byte-identical", guiprobe::cli_determinism},
      {"codec totality and round trip", guiprobe::codec_totality},
      {"ablation matrix ordering", guiprobe::ablation_matrix},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& [name, fn] = criteria[i];
    std::string detail;
    bool ok = false;
    try {
      detail = fn();
      ok = true;
    } catch (const std::exception& e) {
      detail = e.what();
    }
    failed += !ok;
    std::cout << fmt::format("{} {:2d} {}: {}", ok ? "PASS" : "FAIL", i + 1, name, detail)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failed, criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
