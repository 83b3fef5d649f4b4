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

// Talking to agents.
//
// Requests use the chat-completion shape: a model name and one user message
// with an image part (PNG data URI) and a text part. The response text is
// parsed with the endpoint's dialect. A "metadata" object carrying the
// sample_id, the probe spec and the run seed rides along so that test
// doubles can answer without looking at pixels.
//
// base_url forms:
//   http://host:port[/prefix]    POST {base_url}/chat/completions
//   https://...                  same, over TLS
//   reference:<kind>             in-process reference agent (see
//                                ReferenceAgentKind); needs a corpus

#ifndef GUIPROBE_GATEWAY_H_
#define GUIPROBE_GATEWAY_H_

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "guiprobe/codec.h"
#include "guiprobe/core.h"
#include "guiprobe/dataset.h"
#include "guiprobe/perturbation.h"

namespace guiprobe {

inline constexpr std::string_view kApiKeyEnv = "GUIPROBE_API_KEY";

enum class PromptSetting { kHigh, kLow };
std::string_view prompt_setting_name(PromptSetting s);
std::optional<PromptSetting> prompt_setting_from_name(std::string_view name);

struct PromptBundle {
  PromptSetting setting = PromptSetting::kLow;
  std::string goal;
  std::optional<std::string> instruction;
  ScreenPtr screen;
  std::vector<Action> history;
};

struct RenderedPrompt {
  std::string text;
  std::string image_png_base64;
  ScreenSize screen;
};

// A template renders the text part. The dialect is supplied so the template
// can show the expected answer format.
using PromptTemplate =
    std::function<std::string(const PromptBundle&, const Dialect&)>;

// Built-ins: "default" (goal, instruction, history, format hint) and
// "plain" (no format hint). Registering an existing id replaces it.
void register_prompt_template(std::string id, PromptTemplate fn);
bool has_prompt_template(std::string_view id);

// Memoized base64 PNG encodings, keyed by screen identity. Entries hold a
// reference so a key can never be recycled. Thread-safe.
class ScreenEncodingCache {
 public:
  std::string base64(const ScreenPtr& screen);

 private:
  std::mutex mu_;
  std::map<const Screen*, std::pair<ScreenPtr, std::string>> entries_;
};

// Throws ConfigError for an unknown template.
RenderedPrompt build_prompt(std::string_view template_id, const PromptBundle& bundle,
                            const Dialect& dialect, ScreenEncodingCache* cache = nullptr);

struct AgentEndpoint {
  std::string base_url;
  std::string model_name;
  std::string dialect_id = "json";
  double timeout = 60.0;  // seconds
  int max_parallel = 4;
  int max_retries = 2;
  double backoff_initial = 0.2;  // seconds, doubled after each failure
};

nlohmann::json endpoint_to_json(const AgentEndpoint& e);
AgentEndpoint endpoint_from_json(const nlohmann::json& j);
// Throws ConfigError on violated invariants.
void check_endpoint(const AgentEndpoint& e);

struct AgentRequest {
  std::string sample_id;
  RenderedPrompt prompt;
  std::optional<PerturbationSpec> probe;  // empty for a baseline query
  std::uint64_t seed = 0;
  nlohmann::json decoding = nlohmann::json::object();
};

nlohmann::json request_payload(const AgentEndpoint& endpoint, const AgentRequest& req);

struct AgentResponse {
  std::string raw;
  ParseOutcome parsed;
  double latency = 0.0;  // seconds
  int attempt_count = 0;
};

// One round trip. Implementations throw on any transport-level failure; the
// caller decides whether to retry.
class AgentTransport {
 public:
  virtual ~AgentTransport() = default;
  virtual std::string complete(const nlohmann::json& payload) = 0;
};

std::unique_ptr<AgentTransport> make_http_transport(const AgentEndpoint& endpoint);

// Sends `req`, retrying transport failures up to endpoint.max_retries times
// with exponential backoff. Throws TransportError once retries run out.
AgentResponse query_agent(const AgentEndpoint& endpoint, AgentTransport& transport,
                          const Dialect& dialect, const AgentRequest& req);

// Runs fn(0..n-1) on at most max_parallel threads. Exceptions escaping fn
// are rethrown after all workers stop.
void run_bounded(std::size_t n, int max_parallel,
                 const std::function<void(std::size_t)>& fn);

// Reference agents.

enum class ReferenceAgentKind { kMemoryOracle, kReasonerOracle, kRandomAgent };
std::string_view reference_kind_name(ReferenceAgentKind kind);
std::optional<ReferenceAgentKind> reference_kind_from_name(std::string_view name);

// The action the reference agent emits for `perturbed`, in normalized
// coordinates of the perturbed screen.
Action reference_agent_step(ReferenceAgentKind kind, const Step& step,
                            const PerturbedStep& perturbed, std::uint64_t seed = 0);

// Answers chat-completion payloads on behalf of a reference agent by looking
// the step up in `corpus` and recomputing the probe from the metadata.
class ReferenceResponder {
 public:
  ReferenceResponder(ReferenceAgentKind kind, std::shared_ptr<const EpisodeCorpus> corpus,
                     std::shared_ptr<const Dialect> dialect);
  std::string respond(const nlohmann::json& payload) const;
  ReferenceAgentKind kind() const { return kind_; }

 private:
  ReferenceAgentKind kind_;
  std::shared_ptr<const EpisodeCorpus> corpus_;
  std::shared_ptr<const Dialect> dialect_;
};

std::unique_ptr<AgentTransport> make_reference_transport(
    const AgentEndpoint& endpoint, std::shared_ptr<const EpisodeCorpus> corpus,
    std::shared_ptr<const Dialect> dialect);

// HTTP test double. Routes:
//   POST /<kind>/chat/completions   reference agent <kind>
//   POST /fixed/chat/completions    replies with fixed_reply
//   POST /flaky/chat/completions    fails `flaky_failures` times, then fixed_reply
//   POST /down/chat/completions     always 503
// Reference routes answer in the dialect named by the request's
// "metadata.dialect_id" (default json).
class MockAgentServer {
 public:
  explicit MockAgentServer(std::shared_ptr<const EpisodeCorpus> corpus = nullptr);
  ~MockAgentServer();
  MockAgentServer(const MockAgentServer&) = delete;
  MockAgentServer& operator=(const MockAgentServer&) = delete;

  // Binds to 127.0.0.1 on a free port (or `port` when nonzero) and serves in
  // a background thread.
  void start(int port = 0);
  void stop();
  int port() const { return port_; }
  std::string base_url(std::string_view route) const;

  void set_fixed_reply(std::string reply);
  void set_flaky_failures(int n);
  void set_response_delay(std::chrono::milliseconds d);

  int requests_served() const { return served_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::atomic<int> served_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

}  // namespace guiprobe

#endif  // GUIPROBE_GATEWAY_H_
