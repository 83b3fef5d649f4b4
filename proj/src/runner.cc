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

#include "guiprobe/runner.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "guiprobe/errors.h"
#include "guiprobe/image_io.h"

#ifndef GUIPROBE_VERSION
#define GUIPROBE_VERSION "0.0.0"
#endif

namespace guiprobe {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
                      c == '.';
    out += keep ? c : '_';
  }
  return out;
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  out << text;
}

json optional_number(const std::optional<double>& v) {
  return v ? json(round1(*v)) : json(nullptr);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_number(const std::optional<double>& v) {
  return v ? fmt::format("{:.1f}", *v) : std::string();
}

}  // namespace

// ---------------------------------------------------------------------------
// config

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "corpus_path") {
        c.corpus_path = resolve(v.get<std::string>(), base_dir);
      } else if (key == "format_id") {
        c.format_id = v.get<std::string>();
      } else if (key == "agents") {
        for (const json& a : v) c.agents.push_back(endpoint_from_json(a));
      } else if (key == "probes") {
        for (const json& p : v) c.probes.push_back(spec_from_json(p));
      } else if (key == "setting") {
        auto s = prompt_setting_from_name(v.get<std::string>());
        if (!s) throw ConfigError(fmt::format("unknown setting '{}'", v.get<std::string>()));
        c.setting = *s;
      } else if (key == "baseline_filter") {
        c.baseline_filter = v.get<bool>();
      } else if (key == "output_dir") {
        c.output_dir = resolve(v.get<std::string>(), base_dir);
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "max_parallel") {
        if (!v.is_null()) c.max_parallel = v.get<int>();
      } else if (key == "agent_parallel") {
        c.agent_parallel = v.get<int>();
      } else if (key == "history_length") {
        c.history_length = v.get<int>();
      } else if (key == "persist_perturbed") {
        c.persist_perturbed = v.get<bool>();
      } else if (key == "template_id") {
        c.template_id = v.get<std::string>();
      } else if (key == "decoding") {
        if (!v.is_object()) throw ConfigError("decoding must be an object");
        c.decoding = v;
      } else if (key == "grammar_files") {
        for (const json& g : v) c.grammar_files.push_back(resolve(g.get<std::string>(), base_dir));
      } else {
        throw ConfigError(fmt::format("unknown run config field '{}'", key));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed run config: {}", e.what()));
  }
  check_config(c);
  return c;
}

json config_to_json(const RunConfig& c) {
  json agents = json::array();
  for (const auto& a : c.agents) agents.push_back(endpoint_to_json(a));
  json probes = json::array();
  for (const auto& p : c.probes) probes.push_back(spec_to_json(p));
  json grammars = json::array();
  for (const auto& g : c.grammar_files) grammars.push_back(g.generic_string());
  return {{"corpus_path", c.corpus_path.generic_string()},
          {"format_id", c.format_id},
          {"agents", agents},
          {"probes", probes},
          {"setting", prompt_setting_name(c.setting)},
          {"baseline_filter", c.baseline_filter},
          {"output_dir", c.output_dir.generic_string()},
          {"seed", c.seed},
          {"max_parallel", c.max_parallel ? json(*c.max_parallel) : json(nullptr)},
          {"agent_parallel", c.agent_parallel},
          {"history_length", c.history_length},
          {"persist_perturbed", c.persist_perturbed},
          {"template_id", c.template_id},
          {"decoding", c.decoding},
          {"grammar_files", grammars}};
}

RunConfig load_run_config(const fs::path& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError(fmt::format("{} is not valid JSON", path.string()));
  return config_from_json(j, path.parent_path());
}

void check_config(const RunConfig& c) {
  if (c.agents.empty()) throw ConfigError("run config lists no agents");
  if (c.probes.empty()) throw ConfigError("run config lists no probes");
  if (c.corpus_path.empty()) throw ConfigError("run config has no corpus_path");
  if (c.output_dir.empty()) throw ConfigError("run config has no output_dir");
  if (!dataset_format_from_name(c.format_id)) {
    throw ConfigError(fmt::format("unknown format_id '{}'", c.format_id));
  }
  if (c.max_parallel && *c.max_parallel < 1) throw ConfigError("max_parallel must be >= 1");
  if (c.agent_parallel < 1) throw ConfigError("agent_parallel must be >= 1");
  if (c.history_length < 0) throw ConfigError("history_length must be >= 0");
  if (!has_prompt_template(c.template_id)) {
    throw ConfigError(fmt::format("unknown prompt template '{}'", c.template_id));
  }
  std::set<std::string> agent_ids;
  for (const auto& a : c.agents) {
    check_endpoint(a);
    if (!agent_ids.insert(a.model_name).second) {
      throw ConfigError(fmt::format("duplicate agent '{}'", a.model_name));
    }
  }
  std::set<std::string> labels;
  for (const auto& p : c.probes) {
    if (!labels.insert(probe_label(p)).second) {
      throw ConfigError(fmt::format("duplicate probe '{}'", probe_label(p)));
    }
  }
}

std::string config_hash(const RunConfig& config) {
  // nlohmann objects keep keys sorted, so dump() is already canonical.
  return sha256_hex(config_to_json(config).dump());
}

// ---------------------------------------------------------------------------
// summaries

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> kNames = {
      "type_acc", "grounding_acc", "sr", "tsr", "delta_p_type", "delta_p_sr", "vmc", "rs"};
  return kNames;
}

ReportSummary summary_from_report(const json& report) {
  ReportSummary s;
  s.agent_id = report.at("agent_id").get<std::string>();
  s.probe = report.at("probe").get<std::string>();
  s.n = report.at("n_samples").get<std::size_t>();
  s.unanswered = report.at("unanswered_count").get<std::size_t>();
  const json& m = report.at("metrics");
  for (const auto& name : metric_names()) {
    s.metrics[name] = (m.contains(name) && !m[name].is_null())
                          ? std::optional<double>(m[name].get<double>())
                          : std::nullopt;
  }
  return s;
}

std::string summary_csv(const std::vector<ReportSummary>& rows) {
  std::string out = "agent_id,probe,n";
  for (const auto& name : metric_names()) out += "," + name;
  out += ",unanswered\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{}", csv_field(r.agent_id), csv_field(r.probe), r.n);
    for (const auto& name : metric_names()) out += "," + csv_number(r.metrics.at(name));
    out += fmt::format(",{}\n", r.unanswered);
  }
  return out;
}

// ---------------------------------------------------------------------------
// manifests

json manifest_to_json(const RunManifest& m) {
  json reports = json::array();
  for (const auto& r : m.reports) {
    reports.push_back(
        {{"agent_id", r.agent_id}, {"probe", r.probe}, {"path", r.path.generic_string()}});
  }
  json failures = json::array();
  for (const auto& f : m.failures) {
    failures.push_back({{"agent_id", f.agent_id}, {"probe", f.probe}, {"reason", f.reason}});
  }
  return {{"tool_version", m.tool_version},
          {"config_hash", m.config_hash},
          {"corpus_hash", m.corpus_hash},
          {"summary_csv", std::string(kSummaryName)},
          {"reports", reports},
          {"failures", failures},
          {"timings", m.timings}};
}

RunManifest load_manifest(const fs::path& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError(fmt::format("{} is not valid JSON", path.string()));
  RunManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.corpus_hash = j.at("corpus_hash").get<std::string>();
    m.output_dir = path.parent_path();
    for (const json& r : j.at("reports")) {
      m.reports.push_back({r.at("agent_id").get<std::string>(), r.at("probe").get<std::string>(),
                           r.at("path").get<std::string>()});
    }
    for (const json& f : j.at("failures")) {
      m.failures.push_back({f.at("agent_id").get<std::string>(),
                            f.at("probe").get<std::string>(), f.at("reason").get<std::string>()});
    }
    m.timings = j.value("timings", json::object());
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed manifest {}: {}", path.string(), e.what()));
  }
  return m;
}

std::vector<ReportSummary> load_summaries(const RunManifest& manifest) {
  std::vector<ReportSummary> out;
  for (const auto& r : manifest.reports) {
    const fs::path p = resolve(r.path, manifest.output_dir);
    json j = json::parse(read_file(p), nullptr, false);
    if (j.is_discarded()) throw ConfigError(fmt::format("{} is not valid JSON", p.string()));
    out.push_back(summary_from_report(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// the run

namespace {

struct Answer {
  StepOutcome outcome;
  ScreenSize screen;  // frame the prediction refers to
};

struct Query {
  const Step* step = nullptr;
  PerturbedStep perturbed;
};

struct AgentContext {
  const RunConfig* config = nullptr;
  const EpisodeCorpus* corpus = nullptr;
  const std::unordered_map<std::string, const Episode*>* episodes = nullptr;
  AgentEndpoint endpoint;
  const Dialect* dialect = nullptr;
  AgentTransport* transport = nullptr;
  ScreenEncodingCache* images = nullptr;
  struct PerturbedCache* perturbed = nullptr;
};

// Perturbations do not depend on the agent, so agents share them.
struct PerturbedCache {
  std::mutex mu;
  std::map<std::pair<std::string, std::string>, std::shared_ptr<const PerturbedStep>> steps;

  std::shared_ptr<const PerturbedStep> get(const Step& step, const PerturbationSpec& spec) {
    const auto key = std::make_pair(probe_label(spec), step.sample_id);
    {
      std::lock_guard lock(mu);
      if (auto it = steps.find(key); it != steps.end()) return it->second;
    }
    auto p = std::make_shared<const PerturbedStep>(apply_perturbation(step, spec));
    std::lock_guard lock(mu);
    return steps.emplace(key, std::move(p)).first->second;
  }
};

std::vector<Action> history_for(const AgentContext& ctx, const Step& step) {
  std::vector<Action> out;
  if (ctx.config->history_length <= 0) return out;
  auto it = ctx.episodes->find(step.episode_id);
  if (it == ctx.episodes->end()) return out;
  std::vector<const Step*> prior;
  for (const Step& s : it->second->steps) {
    if (s.step_index < step.step_index) prior.push_back(&s);
  }
  const std::size_t keep =
      std::min(prior.size(), static_cast<std::size_t>(ctx.config->history_length));
  for (std::size_t i = prior.size() - keep; i < prior.size(); ++i) {
    out.push_back(normalize_action(prior[i]->gt_action, prior[i]->screen->size()));
  }
  return out;
}

// Answers are index-aligned with `queries`. The last transport error message
// is stored in `last_error`.
std::vector<Answer> run_queries(const AgentContext& ctx, const std::vector<Query>& queries,
                                std::string& last_error) {
  std::vector<Answer> answers(queries.size());
  std::mutex mu;
  run_bounded(queries.size(), ctx.endpoint.max_parallel, [&](std::size_t i) {
    const Query& q = queries[i];
    PromptBundle bundle;
    bundle.setting = ctx.config->setting;
    bundle.goal = q.perturbed.goal;
    bundle.instruction = q.perturbed.instruction.value_or("");
    bundle.screen = q.perturbed.screen;
    bundle.history = history_for(ctx, *q.step);

    AgentRequest req;
    req.sample_id = q.step->sample_id;
    req.prompt = build_prompt(ctx.config->template_id, bundle, *ctx.dialect, ctx.images);
    req.probe = q.perturbed.spec;
    req.seed = ctx.config->seed;
    req.decoding = ctx.config->decoding;

    const ScreenSize size = q.perturbed.screen->size();
    const Action gt = normalize_action(q.perturbed.remapped_gt, size);
    Answer a;
    a.screen = size;
    try {
      AgentResponse r = query_agent(ctx.endpoint, *ctx.transport, *ctx.dialect, req);
      a.outcome = match_action(q.step->sample_id, r.parsed, gt);
    } catch (const TransportError& e) {
      a.outcome = unanswered_outcome(q.step->sample_id);
      std::lock_guard lock(mu);
      last_error = e.what();
    }
    answers[i] = std::move(a);
  });
  return answers;
}

json record_json(const MetricRecord& r) {
  return {{"type_acc", round1(r.type_acc)},
          {"grounding_acc", optional_number(r.grounding_acc)},
          {"sr", round1(r.sr)}};
}

struct ProbeResult {
  std::optional<json> report;
  std::optional<std::string> failure;
};

struct AgentResult {
  std::vector<ProbeResult> probes;  // config order
  double seconds = 0.0;
};

// True when every episode touched by `subset` is complete in it.
bool covers_whole_episodes(const EpisodeCorpus& subset,
                           const std::unordered_map<std::string, const Episode*>& episodes) {
  for (const Episode& e : subset.episodes) {
    auto it = episodes.find(e.id);
    if (it == episodes.end() || it->second->steps.size() != e.steps.size()) return false;
  }
  return true;
}

ProbeResult run_probe(const AgentContext& ctx, const PerturbationSpec& spec,
                      const SubsetResult& family_subset,
                      const std::map<std::string, Answer>& baseline) {
  const RunConfig& config = *ctx.config;
  const ProbeFamily family = family_of(spec.kind);
  const std::string label = probe_label(spec);
  std::vector<std::string> warnings = family_subset.warnings;

  SubsetResult filtered;
  const SubsetResult* subset = &family_subset;
  if (config.baseline_filter) {
    BaselineIndex index;
    index.agent_id = ctx.endpoint.model_name;
    for (const auto& [id, a] : baseline) {
      index.records[id] = {a.outcome.type_ok, a.outcome.grounding_ok.value_or(false),
                           a.outcome.sr_ok};
    }
    try {
      filtered = select_probe_subset(family_subset.corpus, family, &index);
    } catch (const EmptySubsetError& e) {
      return {std::nullopt, fmt::format("empty probe subset after baseline filter: {}", e.what())};
    }
    subset = &filtered;
  }

  std::vector<Query> queries;
  for (const Step* step : subset->corpus.steps()) {
    try {
      queries.push_back({step, *ctx.perturbed->get(*step, spec)});
    } catch (const PerturbationError& e) {
      warnings.push_back(fmt::format("{}: skipped, {}", step->sample_id, e.what()));
    }
  }
  if (queries.empty()) return {std::nullopt, "no step survived the perturbation"};

  if (config.persist_perturbed) {
    const fs::path dir = config.output_dir / "perturbed" / sanitize(ctx.endpoint.model_name) /
                         sanitize(label);
    fs::create_directories(dir);
    for (const Query& q : queries) {
      write_png(dir / (sanitize(q.step->sample_id) + ".png"), *q.perturbed.screen);
    }
  }

  std::string last_error;
  std::vector<Answer> answers = run_queries(ctx, queries, last_error);

  // Sorted by sample_id for stable output.
  std::vector<std::size_t> order(queries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return queries[a].step->sample_id < queries[b].step->sample_id;
  });

  std::vector<StepOutcome> base_outcomes, pert_outcomes;
  std::vector<ScreenSize> base_screens, pert_screens;
  std::vector<std::optional<ActionKind>> kinds;
  json outcomes = json::array();
  for (std::size_t i : order) {
    const Answer& b = baseline.at(queries[i].step->sample_id);
    const Answer& p = answers[i];
    base_outcomes.push_back(b.outcome);
    base_screens.push_back(b.screen);
    pert_outcomes.push_back(p.outcome);
    pert_screens.push_back(p.screen);
    kinds.push_back(p.outcome.pred_kind);
    json o = outcome_to_json(p.outcome);
    o["remap_note"] = remap_note_name(queries[i].perturbed.remap_note);
    o["baseline"] = outcome_to_json(b.outcome);
    outcomes.push_back(std::move(o));
  }

  const MetricRecord base = aggregate(base_outcomes);
  const MetricRecord pert = aggregate(pert_outcomes);
  const DeltaP dp = delta_p(base, pert);

  std::optional<double> tsr;
  if (covers_whole_episodes(subset->corpus, *ctx.episodes)) {
    std::map<std::string, std::vector<StepOutcome>> by_episode;
    for (std::size_t k = 0; k < order.size(); ++k) {
      by_episode[queries[order[k]].step->episode_id].push_back(pert_outcomes[k]);
    }
    std::vector<std::vector<StepOutcome>> groups;
    std::vector<std::size_t> expected;
    for (auto& [id, outs] : by_episode) {
      expected.push_back(ctx.episodes->at(id)->steps.size());
      groups.push_back(std::move(outs));
    }
    tsr = aggregate_tsr(groups, expected);
  }

  std::optional<double> vmc_value, rs;
  json breakdown = nullptr;
  if (family == ProbeFamily::kVisual) {
    const VmcBreakdown vb = vmc_breakdown(base_outcomes, pert_outcomes, base_screens,
                                          pert_screens, kDefaultVmcGamma);
    vmc_value = vb.vmc;
    rs = reflection_score(kinds);
    breakdown = {{"gamma_px", kDefaultVmcGamma}, {"probed", vb.probed},
                 {"within", vb.within},          {"beyond", vb.beyond},
                 {"excluded", vb.excluded}};
  }

  std::size_t parse_failures = 0;
  for (const auto& o : pert_outcomes) parse_failures += o.parse_failure ? 1 : 0;
  if (pert.unanswered > 0) {
    warnings.push_back(fmt::format("{} perturbed queries unanswered; last error: {}",
                                   pert.unanswered, last_error));
  }

  json report = {
      {"agent_id", ctx.endpoint.model_name},
      {"probe", label},
      {"spec", spec_to_json(spec)},
      {"family", probe_family_name(family)},
      {"setting", prompt_setting_name(config.setting)},
      {"baseline_filter", config.baseline_filter},
      {"n_samples", pert.n},
      {"metrics",
       {{"type_acc", round1(pert.type_acc)},
        {"grounding_acc", optional_number(pert.grounding_acc)},
        {"sr", round1(pert.sr)},
        {"tsr", optional_number(tsr)},
        {"delta_p_type", round1(dp.delta_p_type)},
        {"delta_p_sr", round1(dp.delta_p_sr)},
        {"vmc", optional_number(vmc_value)},
        {"rs", optional_number(rs)}}},
      {"baseline_metrics", record_json(base)},
      {"vmc_breakdown", breakdown},
      {"unanswered_count", pert.unanswered},
      {"baseline_unanswered_count", base.unanswered},
      {"parse_failure_count", parse_failures},
      {"warnings", warnings},
      {"outcomes", outcomes},
  };
  return {std::move(report), std::nullopt};
}

AgentResult run_agent(AgentContext ctx, const std::vector<PerturbationSpec>& probes,
                      const std::map<ProbeFamily, SubsetResult>& subsets,
                      const std::map<ProbeFamily, std::string>& subset_errors) {
  const auto start = std::chrono::steady_clock::now();
  AgentResult result;
  result.probes.resize(probes.size());

  // One baseline pass over every step any probe needs.
  std::set<std::string> ids;
  for (const auto& [family, s] : subsets) {
    for (const Step* step : s.corpus.steps()) ids.insert(step->sample_id);
  }
  std::vector<Query> queries;
  for (const auto& id : ids) {
    const Step* step = ctx.corpus->find(id);
    queries.push_back({step, identity_step(*step)});
  }
  std::string last_error;
  std::vector<Answer> answers = run_queries(ctx, queries, last_error);
  std::map<std::string, Answer> baseline;
  std::size_t answered = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    answered += answers[i].outcome.answered ? 1 : 0;
    baseline[queries[i].step->sample_id] = std::move(answers[i]);
  }

  for (std::size_t p = 0; p < probes.size(); ++p) {
    const ProbeFamily family = family_of(probes[p].kind);
    if (auto it = subset_errors.find(family); it != subset_errors.end()) {
      result.probes[p].failure = it->second;
    } else if (!queries.empty() && answered == 0) {
      result.probes[p].failure = fmt::format("agent unreachable: {}", last_error);
    } else {
      try {
        result.probes[p] = run_probe(ctx, probes[p], subsets.at(family), baseline);
      } catch (const Error& e) {
        result.probes[p].failure = e.what();
      }
    }
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

EpisodeCorpus load_corpus(const RunConfig& config) {
  const auto format = dataset_format_from_name(config.format_id);
  if (*format == DatasetFormat::kCanonical) return load_canonical(config.corpus_path);
  AdaptResult r = adapt(*format, config.corpus_path);
  return std::move(r.corpus);
}

}  // namespace

RunManifest run_experiment(const RunConfig& config) {
  check_config(config);
  const auto start = std::chrono::steady_clock::now();

  DialectRegistry dialects = DialectRegistry::with_builtins();
  for (const auto& g : config.grammar_files) dialects.add(load_grammar_dialect(g));
  for (const auto& a : config.agents) {
    if (!dialects.contains(a.dialect_id)) {
      throw ConfigError(fmt::format("agent '{}' uses unknown dialect '{}'", a.model_name,
                                    a.dialect_id));
    }
  }

  auto corpus = std::make_shared<const EpisodeCorpus>(load_corpus(config));
  std::unordered_map<std::string, const Episode*> episodes;
  for (const Episode& e : corpus->episodes) episodes[e.id] = &e;

  std::map<ProbeFamily, SubsetResult> subsets;
  std::map<ProbeFamily, std::string> subset_errors;
  for (const auto& p : config.probes) {
    const ProbeFamily f = family_of(p.kind);
    if (subsets.count(f) || subset_errors.count(f)) continue;
    try {
      subsets.emplace(f, select_probe_subset(*corpus, f));
    } catch (const EmptySubsetError& e) {
      subset_errors[f] = fmt::format("empty probe subset: {}", e.what());
    }
  }

  std::error_code ec;
  fs::create_directories(config.output_dir / "reports", ec);
  if (ec) {
    throw ConfigError(fmt::format("cannot create output directory {}: {}",
                                  config.output_dir.string(), ec.message()));
  }

  ScreenEncodingCache images;
  PerturbedCache perturbed;
  std::vector<AgentResult> results(config.agents.size());
  run_bounded(config.agents.size(), config.agent_parallel, [&](std::size_t i) {
    AgentContext ctx;
    ctx.config = &config;
    ctx.corpus = corpus.get();
    ctx.episodes = &episodes;
    ctx.images = &images;
    ctx.perturbed = &perturbed;
    ctx.endpoint = config.agents[i];
    if (config.max_parallel) ctx.endpoint.max_parallel = *config.max_parallel;
    ctx.dialect = &dialects.get(ctx.endpoint.dialect_id);
    std::unique_ptr<AgentTransport> transport;
    try {
      transport = ctx.endpoint.base_url.rfind("reference:", 0) == 0
                      ? make_reference_transport(ctx.endpoint, corpus,
                                                 dialects.share(ctx.endpoint.dialect_id))
                      : make_http_transport(ctx.endpoint);
    } catch (const ConfigError& e) {
      results[i].probes.assign(config.probes.size(), ProbeResult{std::nullopt, e.what()});
      return;
    }
    ctx.transport = transport.get();
    results[i] = run_agent(ctx, config.probes, subsets, subset_errors);
  });

  RunManifest m;
  m.tool_version = GUIPROBE_VERSION;
  m.config_hash = config_hash(config);
  m.corpus_hash = corpus_hash(*corpus);
  m.output_dir = config.output_dir;
  std::vector<ReportSummary> rows;
  json agent_seconds = json::object();
  for (std::size_t i = 0; i < config.agents.size(); ++i) {
    const std::string& agent = config.agents[i].model_name;
    agent_seconds[agent] = results[i].seconds;
    for (std::size_t p = 0; p < config.probes.size(); ++p) {
      const std::string label = probe_label(config.probes[p]);
      const ProbeResult& r = results[i].probes[p];
      if (!r.report) {
        m.failures.push_back({agent, label, r.failure.value_or("unknown failure")});
        continue;
      }
      const fs::path rel = fs::path("reports") / (sanitize(agent) + "__" + sanitize(label) + ".json");
      write_file(config.output_dir / rel, r.report->dump(2) + "\n");
      m.reports.push_back({agent, label, rel});
      rows.push_back(summary_from_report(*r.report));
    }
  }
  write_file(config.output_dir / kSummaryName, summary_csv(rows));
  m.timings = {
      {"total_seconds",
       std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
      {"agent_seconds", agent_seconds}};
  write_file(config.output_dir / kManifestName, manifest_to_json(m).dump(2) + "\n");
  return m;
}

// ---------------------------------------------------------------------------
// plots and comparisons

PlotTables emit_plot_data(const std::vector<ReportSummary>& reports) {
  PlotTables t;
  t.memory_reasoning = "agent_id,probe,delta_p_sr,reasoning\n";
  t.vmc_rs = "agent_id,probe,vmc,rs\n";
  for (const auto& r : reports) {
    const auto& dp = r.metrics.at("delta_p_sr");
    if (dp) {
      // Work in tenths so 44.8 maps to exactly 0.552.
      const long long tenths = std::llround(*dp * 10.0);
      const double reasoning = static_cast<double>(1000 - tenths) / 1000.0;
      t.memory_reasoning += fmt::format("{},{},{:.1f},{:.3f}\n", csv_field(r.agent_id),
                                        csv_field(r.probe), *dp, reasoning);
    }
    const auto& v = r.metrics.at("vmc");
    const auto& rs = r.metrics.at("rs");
    if (v || rs) {
      t.vmc_rs += fmt::format("{},{},{},{}\n", csv_field(r.agent_id), csv_field(r.probe),
                              csv_number(v), csv_number(rs));
    }
  }
  return t;
}

std::vector<CompareRow> compare_runs(const RunManifest& a, const RunManifest& b) {
  if (a.corpus_hash != b.corpus_hash) {
    throw ConfigError(fmt::format("runs use different corpora ({} vs {})",
                                  a.corpus_hash.substr(0, 12), b.corpus_hash.substr(0, 12)));
  }
  using Key = std::pair<std::string, std::string>;
  std::map<Key, ReportSummary> left, right;
  for (auto& s : load_summaries(a)) left[{s.agent_id, s.probe}] = s;
  for (auto& s : load_summaries(b)) right[{s.agent_id, s.probe}] = s;
  std::set<Key> keys;
  for (const auto& [k, _] : left) keys.insert(k);
  for (const auto& [k, _] : right) keys.insert(k);

  std::vector<CompareRow> rows;
  for (const Key& k : keys) {
    const ReportSummary* l = left.count(k) ? &left.at(k) : nullptr;
    const ReportSummary* r = right.count(k) ? &right.at(k) : nullptr;
    auto value = [](const ReportSummary* s, const std::string& metric) -> std::optional<double> {
      if (s == nullptr) return std::nullopt;
      if (metric == "n") return static_cast<double>(s->n);
      if (metric == "unanswered") return static_cast<double>(s->unanswered);
      return s->metrics.at(metric);
    };
    std::vector<std::string> metrics = {"n"};
    metrics.insert(metrics.end(), metric_names().begin(), metric_names().end());
    metrics.push_back("unanswered");
    for (const auto& metric : metrics) {
      CompareRow row{k.first, k.second, metric, value(l, metric), value(r, metric),
                     std::nullopt, false};
      if (row.a && row.b) {
        row.diff = round1(*row.b - *row.a);
        row.flagged = *row.diff != 0.0;
      } else {
        row.flagged = row.a.has_value() != row.b.has_value();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::string out = "agent_id,probe,metric,a,b,diff,flagged\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", csv_field(r.agent_id), csv_field(r.probe),
                       r.metric, csv_number(r.a), csv_number(r.b), csv_number(r.diff),
                       r.flagged ? 1 : 0);
  }
  return out;
}

}  // namespace guiprobe
