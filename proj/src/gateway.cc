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

#include "guiprobe/gateway.h"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "guiprobe/errors.h"
#include "guiprobe/image_io.h"

namespace guiprobe {

using nlohmann::json;

std::string_view prompt_setting_name(PromptSetting s) {
  return s == PromptSetting::kHigh ? "high" : "low";
}

std::optional<PromptSetting> prompt_setting_from_name(std::string_view name) {
  if (name == "high") return PromptSetting::kHigh;
  if (name == "low") return PromptSetting::kLow;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// prompts

namespace {

std::string render_text(const PromptBundle& b, const Dialect& dialect, bool format_hint) {
  std::string out = fmt::format("Goal: {}\n", b.goal);
  if (b.setting == PromptSetting::kLow) {
    out += fmt::format("Instruction: {}\n", *b.instruction);
  }
  if (!b.history.empty()) {
    const ScreenSize size = b.screen ? b.screen->size()
                                     : ScreenSize{kNormalizedExtent, kNormalizedExtent};
    out += "Previous actions:\n";
    for (std::size_t i = 0; i < b.history.size(); ++i) {
      out += fmt::format("{}. {}\n", i + 1, dialect.serialize(b.history[i], size));
    }
  }
  if (format_hint) {
    out += fmt::format(
        "Reply with exactly one action in the {} format ({}).\nExample: {}\n",
        dialect.id(), dialect.description(), dialect.example());
  }
  return out;
}

struct TemplateTable {
  std::mutex mu;
  std::map<std::string, PromptTemplate, std::less<>> table;

  TemplateTable() {
    table["default"] = [](const PromptBundle& b, const Dialect& d) {
      return render_text(b, d, true);
    };
    table["plain"] = [](const PromptBundle& b, const Dialect& d) {
      return render_text(b, d, false);
    };
  }
};

TemplateTable& templates() {
  static TemplateTable t;
  return t;
}

}  // namespace

void register_prompt_template(std::string id, PromptTemplate fn) {
  TemplateTable& t = templates();
  std::lock_guard lock(t.mu);
  t.table[std::move(id)] = std::move(fn);
}

bool has_prompt_template(std::string_view id) {
  TemplateTable& t = templates();
  std::lock_guard lock(t.mu);
  return t.table.find(id) != t.table.end();
}

std::string ScreenEncodingCache::base64(const ScreenPtr& screen) {
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(screen.get());
    if (it != entries_.end()) return it->second.second;
  }
  std::string encoded = base64_encode(encode_png(*screen));
  std::lock_guard lock(mu_);
  entries_.emplace(screen.get(), std::make_pair(screen, encoded));
  return encoded;
}

RenderedPrompt build_prompt(std::string_view template_id, const PromptBundle& bundle,
                            const Dialect& dialect, ScreenEncodingCache* cache) {
  PromptTemplate fn;
  {
    TemplateTable& t = templates();
    std::lock_guard lock(t.mu);
    auto it = t.table.find(template_id);
    if (it == t.table.end()) {
      throw ConfigError(fmt::format("unknown prompt template '{}'", template_id));
    }
    fn = it->second;
  }
  if (!bundle.screen) throw ConfigError("prompt bundle has no screen");
  if (bundle.setting == PromptSetting::kLow && !bundle.instruction) {
    throw ConfigError("low-level setting needs an instruction");
  }
  RenderedPrompt out;
  out.text = fn(bundle, dialect);
  out.image_png_base64 = cache != nullptr ? cache->base64(bundle.screen)
                                           : base64_encode(encode_png(*bundle.screen));
  out.screen = bundle.screen->size();
  return out;
}

// ---------------------------------------------------------------------------
// endpoints

json endpoint_to_json(const AgentEndpoint& e) {
  return {{"base_url", e.base_url},       {"model_name", e.model_name},
          {"dialect_id", e.dialect_id},   {"timeout", e.timeout},
          {"max_parallel", e.max_parallel}, {"max_retries", e.max_retries},
          {"backoff_initial", e.backoff_initial}};
}

AgentEndpoint endpoint_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("agent endpoint must be an object");
  AgentEndpoint e;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "base_url") {
        e.base_url = value.get<std::string>();
      } else if (key == "model_name") {
        e.model_name = value.get<std::string>();
      } else if (key == "dialect_id") {
        e.dialect_id = value.get<std::string>();
      } else if (key == "timeout") {
        e.timeout = value.get<double>();
      } else if (key == "max_parallel") {
        e.max_parallel = value.get<int>();
      } else if (key == "max_retries") {
        e.max_retries = value.get<int>();
      } else if (key == "backoff_initial") {
        e.backoff_initial = value.get<double>();
      } else {
        throw ConfigError(fmt::format("unknown agent endpoint field '{}'", key));
      }
    }
  } catch (const json::exception& ex) {
    throw ConfigError(fmt::format("bad agent endpoint: {}", ex.what()));
  }
  if (e.model_name.empty()) e.model_name = e.base_url;
  check_endpoint(e);
  return e;
}

void check_endpoint(const AgentEndpoint& e) {
  if (e.base_url.empty()) throw ConfigError("agent endpoint has no base_url");
  if (e.max_parallel < 1) {
    throw ConfigError(fmt::format("{}: max_parallel must be >= 1", e.model_name));
  }
  if (!(e.timeout > 0.0)) {
    throw ConfigError(fmt::format("{}: timeout must be > 0", e.model_name));
  }
  if (e.max_retries < 0) {
    throw ConfigError(fmt::format("{}: max_retries must be >= 0", e.model_name));
  }
  if (e.backoff_initial < 0.0) {
    throw ConfigError(fmt::format("{}: backoff_initial must be >= 0", e.model_name));
  }
}

json request_payload(const AgentEndpoint& endpoint, const AgentRequest& req) {
  json content = json::array();
  content.push_back(
      {{"type", "image_url"},
       {"image_url", {{"url", "data:image/png;base64," + req.prompt.image_png_base64}}}});
  content.push_back({{"type", "text"}, {"text", req.prompt.text}});
  json payload = {
      {"model", endpoint.model_name},
      {"messages", json::array({{{"role", "user"}, {"content", content}}})},
      {"metadata",
       {{"sample_id", req.sample_id},
        {"probe", req.probe ? spec_to_json(*req.probe) : json(nullptr)},
        {"seed", req.seed},
        {"dialect_id", endpoint.dialect_id}}},
  };
  // Decoding parameters go through untouched.
  if (req.decoding.is_object()) {
    for (const auto& [key, value] : req.decoding.items()) {
      if (!payload.contains(key)) payload[key] = value;
    }
  }
  return payload;
}

// ---------------------------------------------------------------------------
// transports

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string prefix;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError(fmt::format("'{}' is not an http(s) URL", url));
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError(fmt::format("unsupported URL scheme in '{}'", url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  if (path_start != std::string::npos) out.prefix = url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

std::string completion_text(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error("response body is not JSON");
  const json* content = nullptr;
  try {
    content = &j.at("choices").at(0).at("message").at("content");
  } catch (const json::exception&) {
    throw Error("response has no choices[0].message.content");
  }
  if (content->is_string()) return content->get<std::string>();
  if (content->is_array()) {
    std::string text;
    for (const json& part : *content) {
      if (part.value("type", "") == "text" && part.contains("text") &&
          part["text"].is_string()) {
        text += part["text"].get<std::string>();
      }
    }
    return text;
  }
  if (content->is_null()) return {};
  throw Error("response content has an unexpected type");
}

class HttpTransport : public AgentTransport {
 public:
  explicit HttpTransport(const AgentEndpoint& e) : endpoint_(e), url_(split_url(e.base_url)) {}

  std::string complete(const json& payload) override {
    httplib::Client cli(url_.scheme_host_port);
    const auto secs = static_cast<time_t>(endpoint_.timeout);
    const auto usecs = static_cast<time_t>((endpoint_.timeout - secs) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (const char* key = std::getenv(std::string(kApiKeyEnv).c_str());
        key != nullptr && *key != '\0') {
      headers.emplace("Authorization", fmt::format("Bearer {}", key));
    }
    auto res = cli.Post(url_.prefix + "/chat/completions", headers, payload.dump(),
                        "application/json");
    if (!res) {
      throw Error(fmt::format("{}: {}", endpoint_.base_url, httplib::to_string(res.error())));
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(fmt::format("{}: HTTP {}", endpoint_.base_url, res->status));
    }
    return completion_text(res->body);
  }

 private:
  AgentEndpoint endpoint_;
  ParsedUrl url_;
};

class ReferenceTransport : public AgentTransport {
 public:
  explicit ReferenceTransport(ReferenceResponder r) : responder_(std::move(r)) {}
  std::string complete(const json& payload) override { return responder_.respond(payload); }

 private:
  ReferenceResponder responder_;
};

}  // namespace

std::unique_ptr<AgentTransport> make_http_transport(const AgentEndpoint& endpoint) {
  return std::make_unique<HttpTransport>(endpoint);
}

std::unique_ptr<AgentTransport> make_reference_transport(
    const AgentEndpoint& endpoint, std::shared_ptr<const EpisodeCorpus> corpus,
    std::shared_ptr<const Dialect> dialect) {
  constexpr std::string_view kPrefix = "reference:";
  std::string_view url = endpoint.base_url;
  if (url.substr(0, kPrefix.size()) != kPrefix) {
    throw ConfigError(fmt::format("'{}' is not a reference endpoint", url));
  }
  auto kind = reference_kind_from_name(url.substr(kPrefix.size()));
  if (!kind) throw ConfigError(fmt::format("unknown reference agent in '{}'", url));
  if (!corpus) throw ConfigError("reference agents need the corpus");
  return std::make_unique<ReferenceTransport>(
      ReferenceResponder(*kind, std::move(corpus), std::move(dialect)));
}

AgentResponse query_agent(const AgentEndpoint& endpoint, AgentTransport& transport,
                          const Dialect& dialect, const AgentRequest& req) {
  const json payload = request_payload(endpoint, req);
  const int max_attempts = endpoint.max_retries + 1;
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    const auto start = std::chrono::steady_clock::now();
    try {
      AgentResponse r;
      r.raw = transport.complete(payload);
      r.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                      .count();
      r.parsed = parse_action(r.raw, dialect, req.prompt.screen);
      r.attempt_count = attempt;
      return r;
    } catch (const std::exception& e) {
      last_error = e.what();
    }
    if (attempt < max_attempts) {
      const double wait = endpoint.backoff_initial * std::ldexp(1.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
  }
  throw TransportError(req.sample_id, max_attempts,
                       fmt::format("sample {}: giving up after {} attempts: {}",
                                   req.sample_id, max_attempts, last_error));
}

void run_bounded(std::size_t n, int max_parallel,
                 const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, max_parallel)));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto work = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        stop = true;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// reference agents

std::string_view reference_kind_name(ReferenceAgentKind kind) {
  switch (kind) {
    case ReferenceAgentKind::kMemoryOracle:
      return "memory_oracle";
    case ReferenceAgentKind::kReasonerOracle:
      return "reasoner_oracle";
    case ReferenceAgentKind::kRandomAgent:
      return "random_agent";
  }
  return "memory_oracle";
}

std::optional<ReferenceAgentKind> reference_kind_from_name(std::string_view name) {
  for (auto k : {ReferenceAgentKind::kMemoryOracle, ReferenceAgentKind::kReasonerOracle,
                 ReferenceAgentKind::kRandomAgent}) {
    if (reference_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Action random_action(std::string_view sample_id, std::uint64_t seed) {
  // Plain modulo draws; std distributions differ between standard libraries.
  std::mt19937_64 rng(fnv1a(sample_id) ^ (seed * 0x9E3779B97F4A7C15ULL));
  auto below = [&rng](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  auto kind_dist = [&] { return below(kNumActionKinds); };
  auto coord = [&] { return below(kNormalizedExtent + 1); };
  auto dir = [&] { return below(4); };
  auto word = [&] { return below(1000); };
  switch (static_cast<ActionKind>(kind_dist())) {
    case ActionKind::kClick: {
      const int x = coord();
      return action::Click{{x, coord()}};
    }
    case ActionKind::kScroll:
      return action::Scroll{static_cast<ScrollDirection>(dir())};
    case ActionKind::kType:
      return action::TypeText{fmt::format("token{}", word())};
    case ActionKind::kOpenApp:
      return action::OpenApp{fmt::format("app{}", word())};
    case ActionKind::kPressBack:
      return action::PressBack{};
    case ActionKind::kPressHome:
      return action::PressHome{};
    case ActionKind::kEnter:
      return action::Enter{};
    case ActionKind::kComplete:
      return action::Complete{};
    case ActionKind::kWait:
      break;
  }
  return action::Wait{};
}

template <typename... Ts>
bool holds_any(const Action& a) {
  return (std::holds_alternative<Ts>(a) || ...);
}

// Kinds a reasoner can still justify with only one modality left. The screen
// alone reveals scrollable or finished states; the instruction alone names
// navigation keys.
Action reasoner_ablated(const Step& step, const PerturbationSpec& spec, ScreenSize size) {
  const Action& gt = step.gt_action;
  const bool v = spec.ablate_keep_visual;
  const bool i = spec.ablate_keep_instruction;
  if (v && i) return normalize_action(gt, size);
  if (v && holds_any<action::Complete, action::Wait, action::Scroll>(gt)) return gt;
  if (!v && i && holds_any<action::PressBack, action::PressHome, action::Wait>(gt)) {
    return gt;
  }
  return action::Wait{};
}

}  // namespace

Action reference_agent_step(ReferenceAgentKind kind, const Step& step,
                            const PerturbedStep& perturbed, std::uint64_t seed) {
  const ScreenSize original = step.screen->size();
  switch (kind) {
    case ReferenceAgentKind::kMemoryOracle:
      return normalize_action(step.gt_action, original);
    case ReferenceAgentKind::kRandomAgent:
      return random_action(step.sample_id, seed);
    case ReferenceAgentKind::kReasonerOracle:
      break;
  }
  if (!perturbed.spec) return normalize_action(step.gt_action, original);
  switch (perturbed.spec->kind) {
    case PerturbationKind::kMask:
    case PerturbationKind::kEdit:
      return action::PressBack{};
    case PerturbationKind::kZoom:
      return normalize_action(perturbed.remapped_gt, perturbed.screen->size());
    case PerturbationKind::kTokenDrop:
      return normalize_action(step.gt_action, original);
    case PerturbationKind::kSentenceSub:
      // The decoy names an app icon; tap where the launcher would put it.
      return action::Click{{kNormalizedExtent / 2, kNormalizedExtent / 2}};
    case PerturbationKind::kAblate:
      return reasoner_ablated(step, *perturbed.spec, original);
  }
  return action::Wait{};
}

ReferenceResponder::ReferenceResponder(ReferenceAgentKind kind,
                                       std::shared_ptr<const EpisodeCorpus> corpus,
                                       std::shared_ptr<const Dialect> dialect)
    : kind_(kind), corpus_(std::move(corpus)), dialect_(std::move(dialect)) {
  if (!corpus_ || !dialect_) throw ConfigError("reference responder needs corpus and dialect");
}

std::string ReferenceResponder::respond(const json& payload) const {
  const json& meta = payload.at("metadata");
  const std::string sample_id = meta.at("sample_id").get<std::string>();
  const Step* step = corpus_->find(sample_id);
  if (step == nullptr) throw Error(fmt::format("unknown sample_id '{}'", sample_id));
  const json& probe = meta.contains("probe") ? meta["probe"] : json(nullptr);
  const PerturbedStep perturbed =
      probe.is_null() ? identity_step(*step) : apply_perturbation(*step, spec_from_json(probe));
  const std::uint64_t seed = meta.value("seed", std::uint64_t{0});
  const Action a = reference_agent_step(kind_, *step, perturbed, seed);
  return dialect_->serialize(a, perturbed.screen->size());
}

// ---------------------------------------------------------------------------
// mock server

struct MockAgentServer::Impl {
  httplib::Server server;
  std::thread thread;
  std::shared_ptr<const EpisodeCorpus> corpus;
  std::map<std::string, std::shared_ptr<const Dialect>, std::less<>> dialects;
  std::mutex mu;
  std::string fixed_reply = R"({"action":"click","x":500,"y":500})";
  int flaky_failures = 0;
  std::chrono::milliseconds delay{0};
};

MockAgentServer::MockAgentServer(std::shared_ptr<const EpisodeCorpus> corpus)
    : impl_(std::make_unique<Impl>()) {
  impl_->corpus = std::move(corpus);
  for (auto make : {make_json_dialect, make_funcall_dialect, make_keyword_dialect}) {
    std::shared_ptr<const Dialect> d = make();
    impl_->dialects[d->id()] = d;
  }

  impl_->server.Post(R"(/(\w+)/chat/completions)", [this](const httplib::Request& req,
                                                          httplib::Response& res) {
    const int now = ++in_flight_;
    int seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    struct Leave {
      std::atomic<int>& n;
      ~Leave() { --n; }
    } leave{in_flight_};
    ++served_;

    std::chrono::milliseconds delay;
    std::string fixed;
    bool fail = false;
    const std::string route = req.matches[1];
    {
      std::lock_guard lock(impl_->mu);
      delay = impl_->delay;
      fixed = impl_->fixed_reply;
      if (route == "flaky" && impl_->flaky_failures > 0) {
        --impl_->flaky_failures;
        fail = true;
      }
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    if (route == "down" || fail) {
      res.status = 503;
      res.set_content("unavailable", "text/plain");
      return;
    }

    std::string text;
    try {
      const json payload = json::parse(req.body);
      if (route == "fixed" || route == "flaky") {
        text = fixed;
      } else {
        auto kind = reference_kind_from_name(route);
        if (!kind || !impl_->corpus) {
          res.status = 404;
          return;
        }
        const std::string dialect_id =
            payload.at("metadata").value("dialect_id", std::string("json"));
        auto it = impl_->dialects.find(dialect_id);
        if (it == impl_->dialects.end()) {
          res.status = 400;
          return;
        }
        text = ReferenceResponder(*kind, impl_->corpus, it->second).respond(payload);
      }
      json body = {{"id", "mock"},
                   {"object", "chat.completion"},
                   {"model", payload.value("model", route)},
                   {"choices", json::array({{{"index", 0},
                                             {"message", {{"role", "assistant"},
                                                          {"content", text}}},
                                             {"finish_reason", "stop"}}})}};
      res.set_content(body.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(e.what(), "text/plain");
    }
  });
}

MockAgentServer::~MockAgentServer() { stop(); }

void MockAgentServer::start(int port) {
  if (impl_->thread.joinable()) return;
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    port_ = impl_->server.bind_to_port("127.0.0.1", port) ? port : -1;
  }
  if (port_ <= 0) throw Error("mock agent server could not bind");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void MockAgentServer::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->server.stop();
  impl_->thread.join();
}

std::string MockAgentServer::base_url(std::string_view route) const {
  return fmt::format("http://127.0.0.1:{}/{}", port_, route);
}

void MockAgentServer::set_fixed_reply(std::string reply) {
  std::lock_guard lock(impl_->mu);
  impl_->fixed_reply = std::move(reply);
}

void MockAgentServer::set_flaky_failures(int n) {
  std::lock_guard lock(impl_->mu);
  impl_->flaky_failures = n;
}

void MockAgentServer::set_response_delay(std::chrono::milliseconds d) {
  std::lock_guard lock(impl_->mu);
  impl_->delay = d;
}

}  // namespace guiprobe
