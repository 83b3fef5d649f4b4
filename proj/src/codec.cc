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

#include "guiprobe/codec.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/regex.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "guiprobe/errors.h"

namespace guiprobe {

using nlohmann::json;

namespace {

constexpr std::size_t kExcerptBytes = 80;

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool is_blank(char c) { return c == ' ' || c == '\t'; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::optional<double> to_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() ||
      !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

// Backslash escaping shared by every quoted-string dialect.
std::string escape_text(std::string_view s, char quote) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\r':
        out += "\\r";
        break;
      default:
        if (c == quote) out += '\\';
        out += c;
    }
  }
  return out;
}

std::string unescape_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    char c = s[++i];
    switch (c) {
      case 'n':
        out += '\n';
        break;
      case 't':
        out += '\t';
        break;
      case 'r':
        out += '\r';
        break;
      default:
        out += c;
    }
  }
  return out;
}

// Reads a quoted string starting at raw[pos]. Returns the unescaped content
// and advances pos past the closing quote.
std::optional<std::string> read_quoted(std::string_view raw, std::size_t& pos) {
  if (pos >= raw.size() || (raw[pos] != '"' && raw[pos] != '\'')) {
    return std::nullopt;
  }
  const char quote = raw[pos];
  std::size_t i = pos + 1;
  while (i < raw.size()) {
    if (raw[i] == '\\') {
      i += 2;
      continue;
    }
    if (raw[i] == quote) {
      std::string out = unescape_text(raw.substr(pos + 1, i - pos - 1));
      pos = i + 1;
      return out;
    }
    ++i;
  }
  return std::nullopt;
}

void skip_blanks(std::string_view raw, std::size_t& pos) {
  while (pos < raw.size() && is_blank(raw[pos])) ++pos;
}

// Pixel coordinates are written as the exact decimal x * extent / 1000 so the
// normalized value survives a round trip for any screen size.
std::string pixel_coordinate(int normalized, int extent) {
  std::int64_t num = std::int64_t{normalized} * extent;
  std::int64_t whole = num / kNormalizedExtent;
  std::int64_t frac = num % kNormalizedExtent;
  if (frac == 0) return std::to_string(whole);
  std::string f = fmt::format("{:03d}", frac);
  while (f.back() == '0') f.pop_back();
  return fmt::format("{}.{}", whole, f);
}

std::pair<std::string, std::string> coordinate_strings(Point p, CoordinateFrame frame,
                                                       ScreenSize screen) {
  if (frame == CoordinateFrame::kNormalized) {
    return {std::to_string(p.x), std::to_string(p.y)};
  }
  if (screen.width < 1 || screen.height < 1) {
    throw Error("pixel-frame dialects need the screen size to serialize");
  }
  return {pixel_coordinate(p.x, screen.width), pixel_coordinate(p.y, screen.height)};
}

struct Built {
  std::optional<Action> action;
  ParseFailureReason reason = ParseFailureReason::kMalformedArguments;
};

Built build_action(const ActionCandidate& c, CoordinateFrame frame,
                   ScreenSize screen) {
  auto kind = kind_from_name(c.kind);
  if (!kind) return {std::nullopt, ParseFailureReason::kUnknownActionKind};
  if (c.malformed) return {};
  switch (*kind) {
    case ActionKind::kClick: {
      if (!c.x || !c.y) return {};
      if (frame == CoordinateFrame::kNormalized) {
        auto axis = [](double v) -> std::optional<int> {
          if (!std::isfinite(v) || v < 0.0 || v > kNormalizedExtent) return std::nullopt;
          return static_cast<int>(std::floor(v + 0.5));
        };
        auto x = axis(*c.x);
        auto y = axis(*c.y);
        if (!x || !y) return {};
        return {action::Click{{*x, *y}}};
      }
      if (screen.width < 1 || screen.height < 1) return {};
      try {
        return {action::Click{normalize_point(*c.x, *c.y, screen)}};
      } catch (const CoordinateRangeError&) {
        return {};
      }
    }
    case ActionKind::kScroll: {
      if (!c.direction) return {};
      auto d = direction_from_name(lower(trim(*c.direction)));
      if (!d) return {};
      return {action::Scroll{*d}};
    }
    case ActionKind::kType:
    case ActionKind::kOpenApp: {
      if (!c.text || trim(*c.text).empty()) return {};
      if (*kind == ActionKind::kType) return {action::TypeText{*c.text}};
      return {action::OpenApp{*c.text}};
    }
    default:
      return {make_bare_action(*kind)};
  }
}

std::string excerpt(std::string_view raw, std::size_t begin) {
  begin = std::min(begin, raw.size());
  return std::string(raw.substr(begin, kExcerptBytes));
}

std::optional<std::string> leading_rationale(std::string_view raw,
                                             std::size_t begin) {
  std::string_view before = trim(raw.substr(0, std::min(begin, raw.size())));
  if (before.empty()) return std::nullopt;
  return std::string(before);
}

// Shared base that stores the descriptive fields.
class DialectBase : public Dialect {
 public:
  DialectBase(std::string id, std::string description, std::string example,
              CoordinateFrame frame)
      : id_(std::move(id)),
        description_(std::move(description)),
        example_(std::move(example)),
        frame_(frame) {}

  const std::string& id() const override { return id_; }
  const std::string& description() const override { return description_; }
  const std::string& example() const override { return example_; }
  CoordinateFrame frame() const override { return frame_; }

 private:
  std::string id_;
  std::string description_;
  std::string example_;
  CoordinateFrame frame_;
};

// ---------------------------------------------------------------------------
// json

class JsonDialect : public DialectBase {
 public:
  JsonDialect()
      : DialectBase("json", "structured JSON object with an \"action\" key",
                    R"({"action":"click","x":500,"y":500})",
                    CoordinateFrame::kNormalized) {}

  std::vector<ActionCandidate> scan(std::string_view raw) const override {
    std::vector<ActionCandidate> out;
    std::size_t i = 0;
    while (i < raw.size()) {
      if (raw[i] != '{') {
        ++i;
        continue;
      }
      std::size_t end = match_brace(raw, i);
      if (end == std::string_view::npos) {
        ++i;
        continue;
      }
      json obj = json::parse(raw.substr(i, end - i), nullptr, false);
      if (obj.is_object() && obj.contains("action")) {
        out.push_back(candidate_from(obj, i, end));
        i = end;
      } else {
        ++i;
      }
    }
    return out;
  }

  std::string serialize(const Action& a, ScreenSize) const override {
    json j;
    j["action"] = kind_name(kind_of(a));
    if (auto p = action_point(a)) {
      j["x"] = p->x;
      j["y"] = p->y;
    }
    if (const auto* s = std::get_if<action::Scroll>(&a)) {
      j["direction"] = direction_name(s->direction);
    }
    if (const auto* t = std::get_if<action::TypeText>(&a)) j["text"] = t->text;
    if (const auto* o = std::get_if<action::OpenApp>(&a)) j["app_name"] = o->app_name;
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
  }

 private:
  // Index one past the brace closing raw[open], honouring JSON strings.
  static std::size_t match_brace(std::string_view raw, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < raw.size(); ++i) {
      char c = raw[i];
      if (in_string) {
        if (c == '\\') {
          ++i;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) return i + 1;
      }
    }
    return std::string_view::npos;
  }

  static ActionCandidate candidate_from(const json& obj, std::size_t begin,
                                        std::size_t end) {
    ActionCandidate c;
    c.begin = begin;
    c.end = end;
    const json& kind = obj["action"];
    if (!kind.is_string()) {
      c.kind = kind.dump(-1, ' ', false, json::error_handler_t::replace);
      return c;
    }
    c.kind = lower(kind.get<std::string>());
    auto number = [&](const json& v, std::optional<double>& slot) {
      if (v.is_number()) {
        slot = v.get<double>();
      } else {
        c.malformed = true;
      }
    };
    if (obj.contains("x")) number(obj["x"], c.x);
    if (obj.contains("y")) number(obj["y"], c.y);
    for (const char* key : {"point", "coordinate"}) {
      if (!obj.contains(key)) continue;
      const json& p = obj[key];
      if (p.is_array() && p.size() == 2) {
        number(p[0], c.x);
        number(p[1], c.y);
      } else {
        c.malformed = true;
      }
    }
    auto string_field = [&](const char* key, std::optional<std::string>& slot) {
      if (!obj.contains(key)) return;
      if (obj[key].is_string()) {
        slot = obj[key].get<std::string>();
      } else {
        c.malformed = true;
      }
    };
    string_field("direction", c.direction);
    string_field("text", c.text);
    string_field("app_name", c.text);
    for (const char* key : {"thought", "reasoning"}) {
      if (obj.contains(key) && obj[key].is_string()) {
        c.rationale = obj[key].get<std::string>();
      }
    }
    return c;
  }
};

// ---------------------------------------------------------------------------
// funcall

class FuncallDialect : public DialectBase {
 public:
  FuncallDialect()
      : DialectBase("funcall",
                    "function-call style with keyword arguments, pixel coordinates",
                    "click(x=540, y=1200)", CoordinateFrame::kPixel) {}

  std::vector<ActionCandidate> scan(std::string_view raw) const override {
    std::vector<ActionCandidate> out;
    std::size_t i = 0;
    while (i < raw.size()) {
      if (!is_ident_start(raw[i]) || (i > 0 && is_ident_char(raw[i - 1]))) {
        ++i;
        continue;
      }
      std::size_t name_end = i;
      while (name_end < raw.size() && is_ident_char(raw[name_end])) ++name_end;
      if (name_end < raw.size() && raw[name_end] == '(') {
        if (auto c = parse_call(raw, i, name_end)) {
          out.push_back(std::move(*c));
          i = out.back().end;
          continue;
        }
      }
      i = name_end;
    }
    return out;
  }

  std::string serialize(const Action& a, ScreenSize screen) const override {
    std::string name(kind_name(kind_of(a)));
    if (auto p = action_point(a)) {
      auto [x, y] = coordinate_strings(*p, frame(), screen);
      return fmt::format("{}(x={}, y={})", name, x, y);
    }
    if (const auto* s = std::get_if<action::Scroll>(&a)) {
      return fmt::format("{}(direction='{}')", name, direction_name(s->direction));
    }
    if (const auto* t = std::get_if<action::TypeText>(&a)) {
      return fmt::format("{}(text='{}')", name, escape_text(t->text, '\''));
    }
    if (const auto* o = std::get_if<action::OpenApp>(&a)) {
      return fmt::format("{}(app_name='{}')", name, escape_text(o->app_name, '\''));
    }
    return name + "()";
  }

 private:
  struct Arg {
    std::string key;  // empty for positional
    std::optional<std::string> string_value;
    std::optional<double> number_value;
    std::string bare;
  };

  static std::optional<ActionCandidate> parse_call(std::string_view raw,
                                                   std::size_t begin,
                                                   std::size_t name_end) {
    std::size_t pos = name_end + 1;
    std::vector<Arg> args;
    skip_blanks(raw, pos);
    if (pos < raw.size() && raw[pos] == ')') {
      ++pos;
    } else {
      while (true) {
        skip_blanks(raw, pos);
        Arg arg;
        std::size_t key_end = pos;
        while (key_end < raw.size() && is_ident_char(raw[key_end])) ++key_end;
        std::size_t after_key = key_end;
        skip_blanks(raw, after_key);
        if (key_end > pos && after_key < raw.size() && raw[after_key] == '=') {
          arg.key = std::string(raw.substr(pos, key_end - pos));
          pos = after_key + 1;
          skip_blanks(raw, pos);
        }
        if (pos >= raw.size()) return std::nullopt;
        if (raw[pos] == '"' || raw[pos] == '\'') {
          arg.string_value = read_quoted(raw, pos);
          if (!arg.string_value) return std::nullopt;
        } else {
          std::size_t v_end = pos;
          while (v_end < raw.size() &&
                 (is_ident_char(raw[v_end]) || raw[v_end] == '.' ||
                  raw[v_end] == '-' || raw[v_end] == '+')) {
            ++v_end;
          }
          if (v_end == pos) return std::nullopt;
          arg.bare = std::string(raw.substr(pos, v_end - pos));
          arg.number_value = to_number(arg.bare);
          pos = v_end;
        }
        args.push_back(std::move(arg));
        skip_blanks(raw, pos);
        if (pos >= raw.size()) return std::nullopt;
        if (raw[pos] == ',') {
          ++pos;
          continue;
        }
        if (raw[pos] == ')') {
          ++pos;
          break;
        }
        return std::nullopt;
      }
    }

    ActionCandidate c;
    c.begin = begin;
    c.end = pos;
    c.kind = lower(raw.substr(begin, name_end - begin));
    assign_args(c, args);
    return c;
  }

  static void assign_args(ActionCandidate& c, const std::vector<Arg>& args) {
    static const std::map<std::string, std::vector<std::string>> kPositional = {
        {"click", {"x", "y"}},
        {"scroll", {"direction"}},
        {"type", {"text"}},
        {"open_app", {"app_name"}},
    };
    std::vector<std::string> order;
    if (auto it = kPositional.find(c.kind); it != kPositional.end()) {
      order = it->second;
    }
    std::size_t positional = 0;
    for (const Arg& arg : args) {
      std::string key = arg.key;
      if (key.empty()) {
        if (positional >= order.size()) {
          c.malformed = true;
          continue;
        }
        key = order[positional++];
      }
      if (key == "x" || key == "y") {
        if (!arg.number_value) {
          c.malformed = true;
          continue;
        }
        (key == "x" ? c.x : c.y) = arg.number_value;
      } else if (key == "direction") {
        c.direction = arg.string_value ? *arg.string_value : arg.bare;
      } else if (key == "text" || key == "app_name") {
        if (!arg.string_value) {
          c.malformed = true;
          continue;
        }
        c.text = arg.string_value;
      } else {
        c.malformed = true;
      }
    }
  }
};

// ---------------------------------------------------------------------------
// keyword

class KeywordDialect : public DialectBase {
 public:
  KeywordDialect()
      : DialectBase("keyword", "\"Thought:\" / \"Action:\" lines with uppercase verbs",
                    "Thought: open the menu\nAction: CLICK <500, 500>",
                    CoordinateFrame::kNormalized) {}

  std::vector<ActionCandidate> scan(std::string_view raw) const override {
    std::vector<ActionCandidate> out;
    const std::string lowered = lower(raw);
    std::size_t search = 0;
    while (true) {
      std::size_t at = lowered.find("action:", search);
      if (at == std::string::npos) break;
      search = at + 7;
      std::size_t pos = at + 7;
      skip_blanks(raw, pos);
      std::size_t kw_end = pos;
      while (kw_end < raw.size() && is_ident_char(raw[kw_end])) ++kw_end;
      if (kw_end == pos) continue;
      ActionCandidate c;
      c.begin = at;
      c.kind = lower(raw.substr(pos, kw_end - pos));
      pos = kw_end;
      parse_args(raw, pos, c);
      c.end = pos;
      c.rationale = thought_before(raw, lowered, at);
      out.push_back(std::move(c));
      search = std::max(search, pos);
    }
    return out;
  }

  std::string serialize(const Action& a, ScreenSize) const override {
    std::string verb = upper(kind_name(kind_of(a)));
    if (auto p = action_point(a)) {
      return fmt::format("Action: {} <{}, {}>", verb, p->x, p->y);
    }
    if (const auto* s = std::get_if<action::Scroll>(&a)) {
      return fmt::format("Action: {} {}", verb, upper(direction_name(s->direction)));
    }
    if (const std::string* text = action_text(a)) {
      return fmt::format("Action: {} \"{}\"", verb, escape_text(*text, '"'));
    }
    return "Action: " + verb;
  }

 private:
  static void parse_args(std::string_view raw, std::size_t& pos, ActionCandidate& c) {
    skip_blanks(raw, pos);
    if (c.kind == "click") {
      char close = 0;
      if (pos < raw.size() && (raw[pos] == '<' || raw[pos] == '(' || raw[pos] == '[')) {
        close = raw[pos] == '<' ? '>' : raw[pos] == '(' ? ')' : ']';
        ++pos;
      }
      auto number = [&]() -> std::optional<double> {
        skip_blanks(raw, pos);
        std::size_t end = pos;
        while (end < raw.size() &&
               (std::isdigit(static_cast<unsigned char>(raw[end])) ||
                raw[end] == '.' || raw[end] == '-' || raw[end] == '+')) {
          ++end;
        }
        auto v = to_number(raw.substr(pos, end - pos));
        pos = end;
        return v;
      };
      c.x = number();
      skip_blanks(raw, pos);
      if (pos < raw.size() && raw[pos] == ',') ++pos;
      c.y = number();
      skip_blanks(raw, pos);
      if (close != 0) {
        if (pos < raw.size() && raw[pos] == close) {
          ++pos;
        } else {
          c.malformed = true;
        }
      }
      if (!c.x || !c.y) c.malformed = true;
    } else if (c.kind == "scroll") {
      std::size_t end = pos;
      while (end < raw.size() && is_ident_char(raw[end])) ++end;
      c.direction = lower(raw.substr(pos, end - pos));
      pos = end;
    } else if (c.kind == "type" || c.kind == "open_app") {
      c.text = read_quoted(raw, pos);
      if (!c.text) c.malformed = true;
    }
  }

  static std::optional<std::string> thought_before(std::string_view raw,
                                                   const std::string& lowered,
                                                   std::size_t action_at) {
    std::size_t t = lowered.rfind("thought:", action_at);
    if (t == std::string::npos || t >= action_at) {
      return leading_rationale(raw, action_at);
    }
    std::string_view body = trim(raw.substr(t + 8, action_at - t - 8));
    if (body.empty()) return std::nullopt;
    return std::string(body);
  }
};

// ---------------------------------------------------------------------------
// grammar-file dialects

class GrammarDialect : public DialectBase {
 public:
  struct Rule {
    std::string kind;
    boost::regex pattern;
    std::map<std::string, int> fields;
    std::string templ;
  };

  GrammarDialect(std::string id, std::string description, std::string example,
                 CoordinateFrame frame, std::vector<Rule> rules)
      : DialectBase(std::move(id), std::move(description), std::move(example), frame),
        rules_(std::move(rules)) {}

  std::vector<ActionCandidate> scan(std::string_view raw) const override {
    std::vector<ActionCandidate> out;
    const std::string text(raw);
    for (const Rule& rule : rules_) {
      try {
        boost::sregex_iterator it(text.begin(), text.end(), rule.pattern);
        for (; it != boost::sregex_iterator(); ++it) {
          const boost::smatch& m = *it;
          ActionCandidate c;
          c.begin = static_cast<std::size_t>(m.position(std::size_t{0}));
          c.end = c.begin + static_cast<std::size_t>(m.length(std::size_t{0}));
          c.kind = rule.kind;
          for (const auto& [field, group] : rule.fields) {
            if (!m[group].matched) continue;
            std::string value = m[group].str();
            if (field == "x" || field == "y") {
              auto v = to_number(value);
              if (!v) c.malformed = true;
              (field == "x" ? c.x : c.y) = v;
            } else if (field == "direction") {
              c.direction = lower(value);
            } else if (field == "text") {
              c.text = unescape_text(value);
            }
          }
          out.push_back(std::move(c));
        }
      } catch (const std::exception&) {
        // Regex complexity limits reached; keep what was found.
      }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ActionCandidate& a, const ActionCandidate& b) {
                       return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
                     });
    return out;
  }

  std::string serialize(const Action& a, ScreenSize screen) const override {
    const std::string_view kind = kind_name(kind_of(a));
    for (const Rule& rule : rules_) {
      if (rule.kind != kind) continue;
      std::string out = rule.templ;
      auto replace = [&out](std::string_view key, const std::string& value) {
        std::string token = fmt::format("{{{}}}", key);
        for (std::size_t p = out.find(token); p != std::string::npos;
             p = out.find(token, p + value.size())) {
          out.replace(p, token.size(), value);
        }
      };
      if (auto p = action_point(a)) {
        auto [x, y] = coordinate_strings(*p, frame(), screen);
        replace("x", x);
        replace("y", y);
      }
      if (const auto* s = std::get_if<action::Scroll>(&a)) {
        replace("direction", std::string(direction_name(s->direction)));
      }
      if (const std::string* text = action_text(a)) {
        replace("text", escape_text(*text, '"'));
      }
      return out;
    }
    throw Error(fmt::format("dialect '{}' has no rule for action kind '{}'", id(), kind));
  }

 private:
  std::vector<Rule> rules_;
};

}  // namespace

std::string_view failure_reason_name(ParseFailureReason reason) {
  switch (reason) {
    case ParseFailureReason::kNoActionFound:
      return "no_action_found";
    case ParseFailureReason::kUnknownActionKind:
      return "unknown_action_kind";
    case ParseFailureReason::kMalformedArguments:
      return "malformed_arguments";
  }
  return "no_action_found";
}

ParseOutcome parse_action(std::string_view raw, const Dialect& dialect,
                          ScreenSize screen) {
  ParseOutcome out;
  std::vector<ActionCandidate> candidates = dialect.scan(raw);
  // A match nested inside another match is part of its arguments (say, a
  // verb quoted in typed text), not an action of its own.
  std::vector<ActionCandidate> outer;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    bool nested = false;
    for (std::size_t j = 0; j < candidates.size() && !nested; ++j) {
      const auto& a = candidates[i];
      const auto& b = candidates[j];
      nested = i != j && b.begin <= a.begin && a.end <= b.end &&
               (b.end - b.begin > a.end - a.begin || j < i);
    }
    if (!nested) outer.push_back(candidates[i]);
  }
  candidates = std::move(outer);
  if (candidates.empty()) {
    out.failure = ParseFailure{ParseFailureReason::kNoActionFound, excerpt(raw, 0)};
    return out;
  }
  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
    Built built = build_action(*it, dialect.frame(), screen);
    if (built.action) {
      out.action = std::move(built.action);
      out.rationale = it->rationale ? it->rationale : leading_rationale(raw, it->begin);
      if (out.rationale && trim(*out.rationale).empty()) out.rationale.reset();
      return out;
    }
  }
  const ActionCandidate& last = candidates.back();
  Built built = build_action(last, dialect.frame(), screen);
  out.failure = ParseFailure{built.reason, excerpt(raw, last.begin)};
  out.rationale = last.rationale ? last.rationale : leading_rationale(raw, last.begin);
  return out;
}

std::string serialize_action(const Action& a, const Dialect& dialect,
                             ScreenSize screen) {
  return dialect.serialize(a, screen);
}

std::unique_ptr<Dialect> make_json_dialect() { return std::make_unique<JsonDialect>(); }
std::unique_ptr<Dialect> make_funcall_dialect() {
  return std::make_unique<FuncallDialect>();
}
std::unique_ptr<Dialect> make_keyword_dialect() {
  return std::make_unique<KeywordDialect>();
}

std::unique_ptr<Dialect> make_grammar_dialect(std::string_view grammar_json) {
  json g = json::parse(grammar_json, nullptr, false);
  if (!g.is_object()) throw ConfigError("grammar file is not a JSON object");
  try {
    std::string id = g.at("id").get<std::string>();
    std::string frame_name = g.value("coordinates", "normalized");
    CoordinateFrame frame;
    if (frame_name == "normalized") {
      frame = CoordinateFrame::kNormalized;
    } else if (frame_name == "pixel") {
      frame = CoordinateFrame::kPixel;
    } else {
      throw ConfigError(fmt::format("grammar '{}': unknown coordinates '{}'", id,
                                    frame_name));
    }
    std::vector<GrammarDialect::Rule> rules;
    for (const json& r : g.at("rules")) {
      GrammarDialect::Rule rule;
      rule.kind = r.at("kind").get<std::string>();
      if (!kind_from_name(rule.kind)) {
        throw ConfigError(fmt::format("grammar '{}': unknown action kind '{}'", id,
                                      rule.kind));
      }
      try {
        rule.pattern = boost::regex(r.at("pattern").get<std::string>());
      } catch (const boost::regex_error& e) {
        throw ConfigError(fmt::format("grammar '{}': bad pattern for {}: {}", id,
                                      rule.kind, e.what()));
      }
      if (r.contains("fields")) {
        for (const auto& [field, group] : r["fields"].items()) {
          int index = group.get<int>();
          if (field != "x" && field != "y" && field != "direction" && field != "text") {
            throw ConfigError(fmt::format("grammar '{}': unknown field '{}'", id, field));
          }
          if (index < 1 || static_cast<std::size_t>(index) > rule.pattern.mark_count()) {
            throw ConfigError(fmt::format("grammar '{}': group {} out of range for {}",
                                          id, index, rule.kind));
          }
          rule.fields[field] = index;
        }
      }
      rule.templ = r.at("template").get<std::string>();
      rules.push_back(std::move(rule));
    }
    return std::make_unique<GrammarDialect>(
        id, g.value("description", std::string("grammar-defined dialect")),
        g.value("example", std::string()), frame, std::move(rules));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed grammar file: {}", e.what()));
  }
}

std::unique_ptr<Dialect> load_grammar_dialect(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open grammar file {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return make_grammar_dialect(ss.str());
}

DialectRegistry DialectRegistry::with_builtins() {
  DialectRegistry r;
  r.add(make_json_dialect());
  r.add(make_funcall_dialect());
  r.add(make_keyword_dialect());
  return r;
}

void DialectRegistry::add(std::unique_ptr<Dialect> dialect) {
  std::string id = dialect->id();
  dialects_[id] = std::shared_ptr<const Dialect>(std::move(dialect));
}

const Dialect& DialectRegistry::get(std::string_view id) const {
  auto it = dialects_.find(id);
  if (it == dialects_.end()) {
    throw ConfigError(fmt::format("unknown dialect '{}'", id));
  }
  return *it->second;
}

std::shared_ptr<const Dialect> DialectRegistry::share(std::string_view id) const {
  auto it = dialects_.find(id);
  if (it == dialects_.end()) {
    throw ConfigError(fmt::format("unknown dialect '{}'", id));
  }
  return it->second;
}

bool DialectRegistry::contains(std::string_view id) const {
  return dialects_.find(id) != dialects_.end();
}

std::vector<std::string> DialectRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : dialects_) out.push_back(id);
  return out;
}

}  // namespace guiprobe
