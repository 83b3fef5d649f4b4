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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "guiprobe/codec.h"
#include "guiprobe/dataset.h"
#include "guiprobe/errors.h"
#include "guiprobe/image_io.h"
#include "guiprobe/metrics.h"
#include "guiprobe/perturbation.h"
#include "guiprobe/runner.h"
#include "guiprobe/synth.h"

namespace py = pybind11;
using json = nlohmann::json;

namespace guiprobe {
namespace {

py::object to_py(const json& j) {
  switch (j.type()) {
    case json::value_t::null:
      return py::none();
    case json::value_t::boolean:
      return py::bool_(j.get<bool>());
    case json::value_t::number_integer:
      return py::int_(j.get<std::int64_t>());
    case json::value_t::number_unsigned:
      return py::int_(j.get<std::uint64_t>());
    case json::value_t::number_float:
      return py::float_(j.get<double>());
    case json::value_t::string:
      return py::str(j.get<std::string>());
    case json::value_t::array: {
      py::list out;
      for (const auto& v : j) out.append(to_py(v));
      return out;
    }
    default: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_py(v);
      return out;
    }
  }
}

// Round-trips through Python's own json module; inputs are small.
json from_py(const py::handle& obj) {
  py::object dumps = py::module_::import("json").attr("dumps");
  return json::parse(dumps(obj).cast<std::string>());
}

DialectRegistry registry_with(const std::vector<std::string>& grammar_files) {
  DialectRegistry reg = DialectRegistry::with_builtins();
  for (const auto& f : grammar_files) reg.add(load_grammar_dialect(f));
  return reg;
}

py::dict outcome_dict(const ParseOutcome& o) {
  py::dict d;
  d["ok"] = o.ok();
  d["action"] = o.action ? to_py(action_to_json(*o.action)) : py::none();
  d["rationale"] = o.rationale ? py::object(py::str(*o.rationale)) : py::none();
  d["failure"] = o.failure ? py::object(py::str(failure_reason_name(o.failure->reason)))
                           : py::none();
  return d;
}

py::dict corpus_summary(const EpisodeCorpus& c) {
  py::dict d;
  d["name"] = c.name;
  d["episodes"] = c.episodes.size();
  d["steps"] = c.step_count();
  d["hash"] = corpus_hash(c);
  py::list ids;
  for (const Step* s : c.steps()) ids.append(s->sample_id);
  d["sample_ids"] = ids;
  return d;
}

}  // namespace
}  // namespace guiprobe

PYBIND11_MODULE(_guiprobe, m) {
  using namespace guiprobe;
  m.doc() = "Native core of guiprobe";
  m.attr("__version__") = GUIPROBE_VERSION;

  // Translators run newest first, so the base class goes in first.
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<LoadError>(m, "LoadError", base);
  py::register_exception<TransportError>(m, "TransportError", base);

  m.def(
      "normalize_point",
      [](double x, double y, int width, int height) {
        const Point p = normalize_point(x, y, {width, height});
        return std::make_pair(p.x, p.y);
      },
      py::arg("x"), py::arg("y"), py::arg("width"), py::arg("height"));

  m.def(
      "zoom_remap",
      [](int x, int y, int width, int height) {
        const ScreenSize size{width, height};
        const Point p = zoom_remap({x, y}, quadrant_of({x, y}, size), size);
        return std::make_pair(p.x, p.y);
      },
      py::arg("x"), py::arg("y"), py::arg("width"), py::arg("height"));

  m.def(
      "match_click",
      [](std::pair<int, int> pred, std::pair<int, int> gt, int threshold) {
        return match_click({pred.first, pred.second}, {gt.first, gt.second}, threshold);
      },
      py::arg("pred"), py::arg("gt"), py::arg("threshold") = kClickThreshold);

  m.def("round1", &round1, py::arg("percent"));

  m.def(
      "vmc",
      [](const std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>>& pairs,
         int gamma) {
        std::vector<PointPair> pts;
        for (const auto& [a, b] : pairs) {
          pts.push_back({{a.first, a.second}, {b.first, b.second}});
        }
        return vmc(pts, gamma);
      },
      py::arg("pairs"), py::arg("gamma") = kDefaultVmcGamma);

  m.def(
      "reflection_score",
      [](const std::vector<std::optional<std::string>>& kinds) {
        std::vector<std::optional<ActionKind>> ks;
        for (const auto& k : kinds) ks.push_back(k ? kind_from_name(*k) : std::nullopt);
        return reflection_score(ks);
      },
      py::arg("kinds"));

  m.def(
      "dialects",
      [](const std::vector<std::string>& grammar_files) {
        return registry_with(grammar_files).ids();
      },
      py::arg("grammar_files") = std::vector<std::string>{});

  m.def(
      "parse_action",
      [](const std::string& raw, const std::string& dialect, int width, int height,
         const std::vector<std::string>& grammar_files) {
        const DialectRegistry reg = registry_with(grammar_files);
        return outcome_dict(parse_action(raw, reg.get(dialect), {width, height}));
      },
      py::arg("raw"), py::arg("dialect") = "json", py::arg("width") = kNormalizedExtent,
      py::arg("height") = kNormalizedExtent,
      py::arg("grammar_files") = std::vector<std::string>{});

  m.def(
      "serialize_action",
      [](const py::dict& action, const std::string& dialect, int width, int height,
         const std::vector<std::string>& grammar_files) {
        const DialectRegistry reg = registry_with(grammar_files);
        return serialize_action(action_from_json(from_py(action)), reg.get(dialect),
                                {width, height});
      },
      py::arg("action"), py::arg("dialect") = "json", py::arg("width") = kNormalizedExtent,
      py::arg("height") = kNormalizedExtent,
      py::arg("grammar_files") = std::vector<std::string>{});

  m.def(
      "perturb_png",
      [](const py::bytes& png, const py::dict& gt_action, const py::dict& spec,
         std::optional<std::string> instruction) {
        const std::string raw = png;
        Step step;
        step.sample_id = "python";
        step.screen = std::make_shared<const Screen>(decode_png(
            std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size())));
        step.gt_action = action_from_json(from_py(gt_action));
        step.instruction = std::move(instruction);
        const PerturbedStep p = apply_perturbation(step, spec_from_json(from_py(spec)));
        const auto out = encode_png(*p.screen);
        py::dict d;
        d["png"] = py::bytes(reinterpret_cast<const char*>(out.data()), out.size());
        d["instruction"] = p.instruction ? py::object(py::str(*p.instruction)) : py::none();
        d["remapped_gt"] = to_py(action_to_json(p.remapped_gt));
        d["remap_note"] = std::string(remap_note_name(p.remap_note));
        return d;
      },
      py::arg("png"), py::arg("gt_action"), py::arg("spec"),
      py::arg("instruction") = std::nullopt);

  m.def(
      "load_corpus",
      [](const std::string& path, const std::string& format) {
        const auto f = dataset_format_from_name(format);
        if (!f) throw ConfigError("unknown dataset format '" + format + "'");
        return corpus_summary(adapt(*f, path).corpus);
      },
      py::arg("path"), py::arg("format") = "canonical");

  m.def(
      "write_synthetic_corpus",
      [](const std::string& out_dir, int episodes, std::uint64_t seed) {
        SynthOptions o;
        o.episodes = episodes;
        o.seed = seed;
        const EpisodeCorpus c = make_synthetic_corpus(o);
        write_canonical(c, out_dir);
        return corpus_summary(c);
      },
      py::arg("out_dir"), py::arg("episodes") = 20, py::arg("seed") = 20);

  m.def(
      "run",
      [](const std::string& config_path, std::optional<std::string> output_dir) {
        RunConfig c = load_run_config(config_path);
        if (output_dir) c.output_dir = *output_dir;
        RunManifest manifest;
        {
          py::gil_scoped_release release;
          manifest = run_experiment(c);
        }
        json j = manifest_to_json(manifest);
        j["output_dir"] = manifest.output_dir.string();
        return to_py(j);
      },
      py::arg("config"), py::arg("output_dir") = std::nullopt);

  m.def(
      "compare",
      [](const std::string& manifest_a, const std::string& manifest_b) {
        py::list rows;
        for (const CompareRow& r : compare_runs(load_manifest(manifest_a),
                                                load_manifest(manifest_b))) {
          py::dict d;
          d["agent_id"] = r.agent_id;
          d["probe"] = r.probe;
          d["metric"] = r.metric;
          d["a"] = r.a;
          d["b"] = r.b;
          d["diff"] = r.diff;
          d["flagged"] = r.flagged;
          rows.append(d);
        }
        return rows;
      },
      py::arg("manifest_a"), py::arg("manifest_b"));
}
