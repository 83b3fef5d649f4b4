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

// Agent output dialects.
//
// A dialect turns free-form agent text into a canonical Action and back.
// Parsing is total: anything that is not a well-formed action yields a
// ParseOutcome carrying a failure reason instead of throwing. When a response
// holds several action blocks the last well-formed one wins, and the text in
// front of it is kept as the rationale.
//
// Built-in dialects:
//   json     {"action":"click","x":500,"y":500}         0..1000 coordinates
//   funcall  click(x=540, y=1200)                       raw pixel coordinates
//   keyword  Thought: ...\nAction: CLICK <500, 500>     0..1000 coordinates
//
// Further dialects can be declared in a grammar file (see
// load_grammar_dialect).

#ifndef GUIPROBE_CODEC_H_
#define GUIPROBE_CODEC_H_

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guiprobe/core.h"

namespace guiprobe {

enum class CoordinateFrame { kNormalized, kPixel };

enum class ParseFailureReason {
  kNoActionFound,
  kUnknownActionKind,
  kMalformedArguments,
};

std::string_view failure_reason_name(ParseFailureReason reason);

struct ParseFailure {
  ParseFailureReason reason = ParseFailureReason::kNoActionFound;
  std::string raw_excerpt;
};

// Exactly one of `action` and `failure` is set. Actions carry normalized
// coordinates.
struct ParseOutcome {
  std::optional<Action> action;
  std::optional<std::string> rationale;
  std::optional<ParseFailure> failure;

  bool ok() const { return action.has_value(); }
};

// One action-shaped span found in a response, before validation.
struct ActionCandidate {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string kind;  // canonical kind name when recognised, else the raw token
  std::optional<double> x;
  std::optional<double> y;
  std::optional<std::string> direction;
  std::optional<std::string> text;
  bool malformed = false;  // the dialect already saw broken arguments
  std::optional<std::string> rationale;  // dialect-specific override
};

class Dialect {
 public:
  virtual ~Dialect() = default;

  virtual const std::string& id() const = 0;
  virtual const std::string& description() const = 0;
  virtual const std::string& example() const = 0;
  virtual CoordinateFrame frame() const = 0;

  // All candidate spans in order of appearance. Must not throw.
  virtual std::vector<ActionCandidate> scan(std::string_view raw) const = 0;

  // Text for `a`, whose coordinates are normalized. Pixel-frame dialects use
  // `screen` to convert.
  virtual std::string serialize(const Action& a, ScreenSize screen) const = 0;
};

ParseOutcome parse_action(std::string_view raw, const Dialect& dialect,
                          ScreenSize screen);
std::string serialize_action(const Action& a, const Dialect& dialect,
                             ScreenSize screen = {kNormalizedExtent,
                                                  kNormalizedExtent});

std::unique_ptr<Dialect> make_json_dialect();
std::unique_ptr<Dialect> make_funcall_dialect();
std::unique_ptr<Dialect> make_keyword_dialect();

// Grammar file (JSON):
//   {"id", "description", "example", "coordinates": "normalized"|"pixel",
//    "rules": [{"kind", "pattern", "fields": {"x": 1, "y": 2, ...},
//               "template"}]}
// `pattern` is a regular expression whose numbered groups feed `fields`;
// `template` renders the action with {x}, {y}, {direction}, {text}
// placeholders. Text captures use backslash escapes in both directions.
std::unique_ptr<Dialect> load_grammar_dialect(const std::filesystem::path& path);
std::unique_ptr<Dialect> make_grammar_dialect(std::string_view grammar_json);

class DialectRegistry {
 public:
  // Registry holding the three built-in dialects.
  static DialectRegistry with_builtins();

  // Replaces any dialect with the same id.
  void add(std::unique_ptr<Dialect> dialect);
  // Throws ConfigError for unknown ids.
  const Dialect& get(std::string_view id) const;
  std::shared_ptr<const Dialect> share(std::string_view id) const;
  bool contains(std::string_view id) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, std::shared_ptr<const Dialect>, std::less<>> dialects_;
};

}  // namespace guiprobe

#endif  // GUIPROBE_CODEC_H_
