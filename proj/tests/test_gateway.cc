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

#include <gtest/gtest.h>

#include <atomic>

#include "guiprobe/errors.h"
#include "guiprobe/gateway.h"
#include "guiprobe/metrics.h"
#include "guiprobe/synth.h"
#include "test_util.h"

namespace guiprobe {
namespace {

using json = nlohmann::json;
using testing::make_step;
using testing::solid_screen;

PromptBundle bundle(PromptSetting setting) {
  PromptBundle b;
  b.setting = setting;
  b.goal = "Set an alarm for 7am";
  b.instruction = "Tap OK";
  b.screen = solid_screen(20, 30);
  return b;
}

TEST(BuildPrompt, LowSettingCarriesInstruction) {
  const auto d = make_json_dialect();
  const RenderedPrompt p = build_prompt("default", bundle(PromptSetting::kLow), *d);
  EXPECT_NE(p.text.find("Tap OK"), std::string::npos);
  EXPECT_NE(p.text.find("Set an alarm for 7am"), std::string::npos);
  EXPECT_EQ(p.screen, (ScreenSize{20, 30}));
  // Lossless: the embedded PNG decodes to the same pixels.
  const Screen back = decode_png(base64_decode(p.image_png_base64));
  EXPECT_EQ(back, *bundle(PromptSetting::kLow).screen);
}

TEST(BuildPrompt, HighSettingHidesInstruction) {
  const auto d = make_json_dialect();
  const RenderedPrompt p = build_prompt("default", bundle(PromptSetting::kHigh), *d);
  EXPECT_NE(p.text.find("Set an alarm for 7am"), std::string::npos);
  EXPECT_EQ(p.text.find("Tap OK"), std::string::npos);
}

TEST(BuildPrompt, HistorySection) {
  const auto d = make_keyword_dialect();
  PromptBundle b = bundle(PromptSetting::kLow);
  EXPECT_EQ(build_prompt("default", b, *d).text.find("Previous actions"), std::string::npos);
  b.history = {action::PressHome{}, action::Click{{10, 20}}};
  const std::string text = build_prompt("default", b, *d).text;
  EXPECT_NE(text.find("Previous actions"), std::string::npos);
  EXPECT_NE(text.find("CLICK <10, 20>"), std::string::npos);
}

TEST(BuildPrompt, TemplatesAndErrors) {
  const auto d = make_json_dialect();
  EXPECT_THROW(build_prompt("nope", bundle(PromptSetting::kLow), *d), ConfigError);
  PromptBundle b = bundle(PromptSetting::kLow);
  b.instruction.reset();
  EXPECT_THROW(build_prompt("default", b, *d), ConfigError);
  EXPECT_EQ(build_prompt("plain", bundle(PromptSetting::kLow), *d).text.find("Example"),
            std::string::npos);
  register_prompt_template("terse", [](const PromptBundle& pb, const Dialect&) { return pb.goal; });
  EXPECT_TRUE(has_prompt_template("terse"));
  EXPECT_EQ(build_prompt("terse", bundle(PromptSetting::kLow), *d).text, "Set an alarm for 7am");
}

TEST(BuildPrompt, CacheReturnsSameEncoding) {
  const auto d = make_json_dialect();
  ScreenEncodingCache cache;
  const PromptBundle b = bundle(PromptSetting::kLow);
  EXPECT_EQ(build_prompt("default", b, *d, &cache).image_png_base64,
            build_prompt("default", b, *d).image_png_base64);
  EXPECT_EQ(cache.base64(b.screen), cache.base64(b.screen));
}

TEST(Endpoint, JsonAndChecks) {
  const AgentEndpoint e = endpoint_from_json({{"base_url", "http://localhost:1"}});
  EXPECT_EQ(e.model_name, "http://localhost:1");
  EXPECT_EQ(e.dialect_id, "json");
  EXPECT_EQ(endpoint_from_json(endpoint_to_json(e)).base_url, e.base_url);
  EXPECT_THROW(endpoint_from_json({{"base_url", "x"}, {"colour", 1}}), ConfigError);
  AgentEndpoint bad = e;
  bad.max_parallel = 0;
  EXPECT_THROW(check_endpoint(bad), ConfigError);
  bad = e;
  bad.max_retries = -1;
  EXPECT_THROW(check_endpoint(bad), ConfigError);
}

AgentRequest request_for(const std::string& id, ScreenPtr screen = solid_screen(100, 100)) {
  const auto d = make_json_dialect();
  PromptBundle b = bundle(PromptSetting::kLow);
  b.screen = std::move(screen);
  AgentRequest r;
  r.sample_id = id;
  r.prompt = build_prompt("default", b, *d);
  r.decoding = {{"temperature", 0}};
  return r;
}

TEST(RequestPayload, Shape) {
  AgentEndpoint e;
  e.base_url = "http://h";
  e.model_name = "m";
  const json p = request_payload(e, request_for("s1"));
  EXPECT_EQ(p["model"], "m");
  EXPECT_EQ(p["temperature"], 0);
  EXPECT_EQ(p["metadata"]["sample_id"], "s1");
  EXPECT_TRUE(p["metadata"]["probe"].is_null());
  const json& content = p["messages"][0]["content"];
  ASSERT_EQ(content.size(), 2u);
  EXPECT_EQ(content[0]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,", 0),
            0u);
}

class MockServerTest : public ::testing::Test {
 protected:
  void SetUp() override { server_.start(); }
  void TearDown() override { server_.stop(); }

  AgentEndpoint endpoint(std::string_view route) {
    AgentEndpoint e;
    e.base_url = server_.base_url(route);
    e.model_name = std::string(route);
    e.timeout = 5;
    e.backoff_initial = 0.01;
    return e;
  }

  MockAgentServer server_;
};

TEST_F(MockServerTest, FixedClick) {
  const AgentEndpoint e = endpoint("fixed");
  auto t = make_http_transport(e);
  const auto d = make_json_dialect();
  const AgentResponse r = query_agent(e, *t, *d, request_for("a"));
  ASSERT_TRUE(r.parsed.ok());
  EXPECT_EQ(*r.parsed.action, Action(action::Click{{500, 500}}));
  EXPECT_EQ(r.attempt_count, 1);
}

TEST_F(MockServerTest, FlakyThenSuccess) {
  server_.set_flaky_failures(2);
  AgentEndpoint e = endpoint("flaky");
  e.max_retries = 3;
  auto t = make_http_transport(e);
  const auto d = make_json_dialect();
  const AgentResponse r = query_agent(e, *t, *d, request_for("a"));
  EXPECT_TRUE(r.parsed.ok());
  EXPECT_EQ(r.attempt_count, 3);
}

TEST_F(MockServerTest, AlwaysDown) {
  AgentEndpoint e = endpoint("down");
  e.max_retries = 1;
  auto t = make_http_transport(e);
  const auto d = make_json_dialect();
  try {
    query_agent(e, *t, *d, request_for("lost/1"));
    FAIL() << "expected TransportError";
  } catch (const TransportError& err) {
    EXPECT_EQ(err.attempts(), 2);
    EXPECT_EQ(err.sample_id(), "lost/1");
  }
  EXPECT_EQ(server_.requests_served(), 2);
}

TEST_F(MockServerTest, BoundedParallelism) {
  server_.set_response_delay(std::chrono::milliseconds(30));
  AgentEndpoint e = endpoint("fixed");
  e.max_parallel = 3;
  const auto d = make_json_dialect();
  std::atomic<int> ok{0};
  run_bounded(24, e.max_parallel, [&](std::size_t i) {
    auto t = make_http_transport(e);
    if (query_agent(e, *t, *d, request_for(std::to_string(i))).parsed.ok()) ++ok;
  });
  EXPECT_EQ(ok.load(), 24);
  EXPECT_LE(server_.max_in_flight(), 3);
  EXPECT_GE(server_.max_in_flight(), 2);
}

TEST(RunBounded, PropagatesFirstError) {
  EXPECT_THROW(run_bounded(10, 2,
                           [](std::size_t i) {
                             if (i == 4) throw ConfigError("boom");
                           }),
               ConfigError);
}

TEST(ReferenceAgents, MemoryUnderZoomIsWrong) {
  const Step s = make_step("z", action::Click{{700, 300}}, solid_screen(1000, 1000));
  PerturbationSpec spec;
  spec.kind = PerturbationKind::kZoom;
  const PerturbedStep p = apply_perturbation(s, spec);
  const Action a = reference_agent_step(ReferenceAgentKind::kMemoryOracle, s, p);
  EXPECT_EQ(a, Action(action::Click{{700, 300}}));
  ParseOutcome po;
  po.action = a;
  EXPECT_FALSE(match_action("z", po, normalize_action(p.remapped_gt, p.screen->size())).sr_ok);
  const Action r = reference_agent_step(ReferenceAgentKind::kReasonerOracle, s, p);
  EXPECT_EQ(r, Action(action::Click{{400, 600}}));
}

TEST(ReferenceAgents, ReasonerReflectsUnderMask) {
  const Step s = make_step("m", action::Click{{50, 50}});
  PerturbationSpec spec;
  const PerturbedStep p = apply_perturbation(s, spec);
  EXPECT_EQ(reference_agent_step(ReferenceAgentKind::kReasonerOracle, s, p),
            Action(action::PressBack{}));
  EXPECT_TRUE(is_reflective(ActionKind::kPressBack));
}

TEST(ReferenceAgents, RandomIsSeeded) {
  const Step s = make_step("r/1", action::Wait{});
  const PerturbedStep p = identity_step(s);
  const auto kind = ReferenceAgentKind::kRandomAgent;
  EXPECT_EQ(reference_agent_step(kind, s, p, 3), reference_agent_step(kind, s, p, 3));
  int differs = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    differs += reference_agent_step(kind, s, p, seed) != reference_agent_step(kind, s, p, 0);
  }
  EXPECT_GT(differs, 0);
}

TEST(ReferenceAgents, ServedOverHttpInEachDialect) {
  auto corpus = std::make_shared<const EpisodeCorpus>(make_synthetic_corpus({2, 4, {90, 160}}));
  MockAgentServer server(corpus);
  server.start();
  const Step& step = corpus->episodes[0].steps[1];  // a click in script 0
  ASSERT_EQ(kind_of(step.gt_action), ActionKind::kClick);
  DialectRegistry reg = DialectRegistry::with_builtins();
  for (const std::string& id : reg.ids()) {
    AgentEndpoint e;
    e.base_url = server.base_url("memory_oracle");
    e.model_name = "memory_oracle";
    e.dialect_id = id;
    auto t = make_http_transport(e);
    AgentRequest r = request_for(step.sample_id, step.screen);
    const AgentResponse resp = query_agent(e, *t, reg.get(id), r);
    ASSERT_TRUE(resp.parsed.ok()) << id << ": " << resp.raw;
    EXPECT_EQ(*resp.parsed.action, normalize_action(step.gt_action, step.screen->size())) << id;
  }
  server.stop();
}

TEST(ReferenceAgents, InProcessTransport) {
  auto corpus = std::make_shared<const EpisodeCorpus>(make_synthetic_corpus({1, 4, {90, 160}}));
  AgentEndpoint e;
  e.base_url = "reference:reasoner_oracle";
  e.model_name = "r";
  auto dialect = DialectRegistry::with_builtins().share("json");
  auto t = make_reference_transport(e, corpus, dialect);
  const Step& step = corpus->episodes[0].steps[0];
  const AgentResponse resp = query_agent(e, *t, *dialect, request_for(step.sample_id, step.screen));
  ASSERT_TRUE(resp.parsed.ok());
  EXPECT_EQ(*resp.parsed.action, step.gt_action);
  e.base_url = "reference:oracle_of_delphi";
  EXPECT_THROW(make_reference_transport(e, corpus, dialect), ConfigError);
}

}  // namespace
}  // namespace guiprobe
