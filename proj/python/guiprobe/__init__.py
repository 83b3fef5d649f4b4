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

"""Probe GUI agents for memorization versus reasoning."""

from ._guiprobe import (
    ConfigError,
    Error,
    LoadError,
    TransportError,
    __version__,
    compare,
    dialects,
    load_corpus,
    match_click,
    normalize_point,
    parse_action,
    perturb_png,
    reflection_score,
    round1,
    run,
    serialize_action,
    vmc,
    write_synthetic_corpus,
    zoom_remap,
)

__all__ = [
    "ConfigError",
    "Error",
    "LoadError",
    "TransportError",
    "__version__",
    "compare",
    "dialects",
    "load_corpus",
    "match_click",
    "normalize_point",
    "parse_action",
    "perturb_png",
    "reflection_score",
    "round1",
    "run",
    "serialize_action",
    "vmc",
    "write_synthetic_corpus",
    "zoom_remap",
]
