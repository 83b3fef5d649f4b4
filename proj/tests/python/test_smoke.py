# Copyright 2026 The guiprobe Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import csv
import io
import json
import os
import pathlib

import pytest

import guiprobe

FIXTURES = pathlib.Path(os.environ.get(
    "GUIPROBE_FIXTURE_DIR", pathlib.Path(__file__).resolve().parents[2] / "fixtures"))


def test_geometry():
    assert guiprobe.normalize_point(540, 1200, 1080, 2400) == (500, 500)
    assert guiprobe.zoom_remap(700, 300, 1000, 1000) == (400, 600)
    assert guiprobe.match_click((598, 598), (500, 500))
    assert not guiprobe.match_click((600, 600), (500, 500))


def test_metrics():
    assert guiprobe.round1(guiprobe.vmc([((0, 0), (0, 0)), ((0, 0), (30, 40)),
                                         ((0, 0), (51, 0))])) == 66.7
    assert guiprobe.vmc([]) is None
    assert guiprobe.reflection_score(["press_back", "click", "wait", "type"]) == 50.0


def test_codec_round_trip():
    grammar = str(FIXTURES / "grammars" / "example.json")
    ids = guiprobe.dialects([grammar])
    assert ids == ["funcall", "json", "keyword", "tapscript"]
    action = {"kind": "type", "text": 'say "hi"'}
    for d in ids:
        text = guiprobe.serialize_action(action, d, 360, 640, grammar_files=[grammar])
        out = guiprobe.parse_action(text, d, 360, 640, grammar_files=[grammar])
        assert out["ok"], (d, text)
        assert out["action"]["kind"] == "type"
        assert out["action"]["text"] == 'say "hi"'
    failed = guiprobe.parse_action("the answer is maybe")
    assert not failed["ok"] and failed["failure"] == "no_action_found"


def test_unknown_dialect_raises():
    with pytest.raises(guiprobe.ConfigError):
        guiprobe.parse_action("{}", "xml")


def test_perturb_png_zoom(tmp_path):
    from PIL import Image
    img = Image.new("RGB", (100, 60), (200, 10, 10))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    out = guiprobe.perturb_png(buf.getvalue(), {"kind": "click", "x": 70, "y": 40},
                               {"kind": "zoom"})
    assert out["remap_note"] == "zoom_remapped"
    gt = out["remapped_gt"]
    assert (gt["kind"], gt["x"], gt["y"]) == ("click", 40, 20)
    zoomed = Image.open(io.BytesIO(out["png"]))
    assert zoomed.size == (100, 60)
    assert zoomed.getpixel((5, 5)) == (200, 10, 10)


def test_synthetic_run_and_compare(tmp_path):
    corpus = guiprobe.write_synthetic_corpus(str(tmp_path / "corpus"), episodes=3, seed=4)
    assert corpus["episodes"] == 3
    assert guiprobe.load_corpus(str(tmp_path / "corpus"))["hash"] == corpus["hash"]
    config = {
        "corpus_path": "corpus",
        "agents": [{"base_url": "reference:memory_oracle", "model_name": "memory_oracle"}],
        "probes": [{"kind": "mask"}, {"kind": "zoom"}],
        "output_dir": "out",
        "seed": 1,
    }
    (tmp_path / "config.json").write_text(json.dumps(config))
    a = guiprobe.run(str(tmp_path / "config.json"))
    b = guiprobe.run(str(tmp_path / "config.json"), str(tmp_path / "out2"))
    assert a["failures"] == [] and len(a["reports"]) == 2
    rows = list(csv.DictReader(open(pathlib.Path(a["output_dir"]) / "summary.csv")))
    zoom = next(r for r in rows if r["probe"] == "zoom")
    assert float(zoom["delta_p_sr"]) == 100.0
    diffs = guiprobe.compare(str(pathlib.Path(a["output_dir"]) / "run_manifest.json"),
                             str(pathlib.Path(b["output_dir"]) / "run_manifest.json"))
    assert diffs and not any(r["flagged"] for r in diffs)
