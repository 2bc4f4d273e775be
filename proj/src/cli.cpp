#include "pacr/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "pacr/calibration.hpp"
#include "pacr/core.hpp"
#include "pacr/digest.hpp"
#include "pacr/errors.hpp"
#include "pacr/gateway/client.hpp"
#include "pacr/gateway/dataset.hpp"
#include "pacr/routing.hpp"
#include "pacr/simulation.hpp"
#include "pacr/uncertainty.hpp"
#include "pacr/version.hpp"

namespace pacr::cli {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

json input_entry(const std::string& path) {
  return json{{"path", path}, {"sha256", sha256_hex(read_file(path))}};
}

// Every artifact gets a sibling <output>.manifest.json recording the command,
// library version, input digests, parameters and seeds.  Nothing
// time-dependent goes in, so rerunning a command reproduces the manifest
// byte for byte.
void write_manifest(const std::string& output_path, const std::string& command,
                    const json& inputs, const json& params, const json& seeds) {
  json m{{"command", command},
         {"version", kVersion},
         {"inputs", inputs},
         {"params", params},
         {"seeds", seeds}};
  const std::string path = output_path + ".manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestError("cannot write '" + path + "'");
  out << m.dump(2) << '\n';
}

AnswerExtractor make_extractor(const std::string& name) {
  if (name == "boxed") return AnswerExtractor(extract_boxed);
  return nullptr;
}

// The one non-empty score kind shared by all records, or "" when none is
// stamped.  Mixed kinds are a configuration error: the two families are not
// on a common scale.
std::string consistent_score_kind(std::span<const CalibrationRecord> records) {
  std::string seen;
  for (const CalibrationRecord& r : records) {
    if (r.score_kind.empty()) continue;
    if (seen.empty()) {
      seen = r.score_kind;
    } else if (seen != r.score_kind) {
      throw ConfigError("records mix score kinds '" + seen + "' and '" + r.score_kind + "'");
    }
  }
  return seen;
}

// ---------------------------------------------------------------------------
// score: run the cheap model over raw items and attach an uncertainty score.

struct ScoreArgs {
  std::string input;
  std::string endpoint;
  std::string output;
  std::string kind = "logits";
  std::string extract = "none";
  int trials = 5;
};

int run_score(const ScoreArgs& a, std::ostream& out) {
  gw::EndpointConfig cfg = gw::EndpointConfig::from_json_file(a.endpoint);
  cfg.want_logprobs = (a.kind == "logits");
  gw::OpenAiClient client(cfg);

  const std::vector<gw::InputItem> items = gw::read_input_jsonl(a.input);
  const AnswerExtractor extractor = make_extractor(a.extract);

  std::vector<CalibrationRecord> records;
  records.reserve(items.size());
  for (const gw::InputItem& item : items) {
    const gw::Completion c = client.complete(item.prompt);
    CalibrationRecord r;
    r.id = item.id;
    r.prompt = item.prompt;
    r.cheap_answer = canonical_answer(c.text, extractor);
    r.cheap_tokens = c.completion_tokens;
    r.gold_answer = item.gold;
    r.score_kind = a.kind;
    r.flags.push_back("token_source:" + c.token_source);
    if (a.kind == "logits") {
      r.uncertainty = logits_uncertainty(TokenProbs{c.token_probs});
    } else {
      const gw::VerbalizedResult vr =
          client.verbalized_confidence(item.prompt, r.cheap_answer, a.trials);
      r.uncertainty = verbalized_uncertainty(VerbalizedTrials{vr.confidences});
      r.flags.insert(r.flags.end(), vr.flags.begin(), vr.flags.end());
    }
    records.push_back(std::move(r));
  }

  gw::write_records_jsonl(records, a.output);
  write_manifest(a.output, "score",
                 json{{"input", input_entry(a.input)}, {"endpoint", input_entry(a.endpoint)}},
                 json{{"score_kind", a.kind},
                      {"trials", a.trials},
                      {"extract", a.extract},
                      {"model", cfg.model},
                      {"mode", cfg.mode}},
                 json::object());
  out << "scored " << records.size() << " items (" << client.http_calls() << " http calls, "
      << client.cache_hits() << " cache hits)\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// calibrate: pick the largest threshold whose risk bound fits the budget.

struct CalibrateArgs {
  std::string records;
  std::string output;
  std::string endpoint;        // expert, for live loss queries
  std::string embed_endpoint;  // for the semantic loss
  std::string bound = "clt";
  std::string loss = "binary";
  std::string extract = "none";
  double epsilon = 0.08;
  double alpha = 0.05;
  double pi = 0.5;
  double loss_upper = 0.0;  // 0 -> 1 for binary, 2 for semantic
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  bool without_replacement = false;
};

int run_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<CalibrationRecord> records = gw::read_records_jsonl(a.records);
  const std::string score_kind = consistent_score_kind(records);

  RiskBudget budget;
  budget.epsilon = a.epsilon;
  budget.alpha = a.alpha;
  budget.loss_lower = 0.0;
  budget.loss_upper = a.loss_upper > 0.0 ? a.loss_upper : (a.loss == "semantic" ? 2.0 : 1.0);
  budget.validate();

  SamplingPlan plan = default_plan(records.size(), a.pi, a.seed);
  if (a.without_replacement) {
    plan.with_replacement = false;
    plan.sample_size = a.sample_size > 0 ? a.sample_size : records.size();
  } else if (a.sample_size > 0) {
    plan.sample_size = a.sample_size;
  }

  std::optional<gw::OpenAiClient> expert;
  std::optional<gw::OpenAiClient> embedder;
  if (!a.endpoint.empty()) expert.emplace(gw::EndpointConfig::from_json_file(a.endpoint));
  if (!a.embed_endpoint.empty())
    embedder.emplace(gw::EndpointConfig::from_json_file(a.embed_endpoint));
  const AnswerExtractor extractor = make_extractor(a.extract);

  // Transport failures inside the sampling loop surface as SampleDrawError;
  // remember whether the underlying cause was the network so the exit code
  // stays honest.
  bool transport_seen = false;
  const LossOracle oracle = [&](const CalibrationRecord& r) -> double {
    try {
      if (r.loss) return *r.loss;
      std::string expert_text;
      if (r.expert_answer) {
        expert_text = *r.expert_answer;
      } else if (expert) {
        if (r.prompt.empty())
          throw IncompleteRecordError("record '" + r.id +
                                      "' has no prompt to send to the expert endpoint");
        expert_text = canonical_answer(expert->complete(r.prompt, "expert").text, extractor);
      } else {
        throw IncompleteRecordError("record '" + r.id +
                                    "' has no loss, no expert answer, and no expert endpoint "
                                    "was given");
      }
      if (a.loss == "binary") {
        if (!r.gold_answer)
          throw IncompleteRecordError("record '" + r.id +
                                      "' has no gold answer for the binary loss");
        return binary_loss(r.cheap_answer, expert_text, *r.gold_answer);
      }
      if (!embedder)
        throw ConfigError("semantic loss needs --embed-endpoint for the embedding model");
      return semantic_loss(embedder->embed(r.cheap_answer), embedder->embed(expert_text));
    } catch (const TransportError&) {
      transport_seen = true;
      throw;
    }
  };

  CalibrationResult result;
  try {
    result = calibrate(records, plan, budget, bound_kind_from_string(a.bound), oracle);
  } catch (const SampleDrawError& e) {
    err << "error: " << e.what() << '\n';
    return transport_seen ? kTransport : kConfig;
  }
  result.policy.score_kind = score_kind;

  out << "threshold curve (" << to_string(result.curve.kind) << ", alpha " << result.curve.alpha
      << ", m " << result.curve.sample_count << "):\n";
  out << "  u         mean      bound\n";
  for (std::size_t i = 0; i < result.curve.grid.size(); ++i) {
    char line[80];
    std::snprintf(line, sizeof line, "  %-9.6f %-9.6f %-9.6f\n", result.curve.grid[i],
                  result.curve.means[i], result.curve.bounds[i]);
    out << line;
  }
  if (!result.curve.degenerate_sigma.empty()) {
    err << "warning: sample stddev is exactly 0 at " << result.curve.degenerate_sigma.size()
        << " grid point(s); the asymptotic bound degenerates to the plain mean there\n";
  }

  save_policy(result.policy, a.output);
  json inputs{{"records", input_entry(a.records)}};
  if (!a.endpoint.empty()) inputs["endpoint"] = input_entry(a.endpoint);
  if (!a.embed_endpoint.empty()) inputs["embed_endpoint"] = input_entry(a.embed_endpoint);
  write_manifest(a.output, "calibrate", inputs,
                 json{{"epsilon", a.epsilon},
                      {"alpha", a.alpha},
                      {"bound", a.bound},
                      {"loss", a.loss},
                      {"loss_upper", budget.loss_upper},
                      {"pi", a.pi},
                      {"sample_size", plan.sample_size},
                      {"without_replacement", a.without_replacement},
                      {"extract", a.extract},
                      {"n_records", records.size()},
                      {"curve_digest", result.policy.curve_digest}},
                 json{{"seed", a.seed}});

  if (!result.policy.feasible) {
    err << "no feasible threshold: every grid point exceeds epsilon " << budget.epsilon
        << "; policy routes everything to the expert\n";
    out << "selected threshold 0 (infeasible)\n";
    return kInfeasible;
  }
  out << "selected threshold " << result.policy.threshold << " (feasible)\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// route: apply a saved policy to scored items.

struct RouteArgs {
  std::string records;
  std::string policy;
  std::string endpoint;
  std::string decisions;
  std::string report;
  std::string extract = "none";
  std::size_t max_parallel = 1;
};

int run_route(const RouteArgs& a, std::ostream& out, std::ostream& err) {
  const ThresholdPolicy policy = load_policy(a.policy);
  std::vector<CalibrationRecord> records = gw::read_records_jsonl(a.records);
  const std::string records_kind = consistent_score_kind(records);
  if (!policy.score_kind.empty() && !records_kind.empty() && policy.score_kind != records_kind)
    throw ConfigError("policy was calibrated on '" + policy.score_kind +
                      "' scores but the records carry '" + records_kind + "'");

  std::vector<TestItem> items;
  std::unordered_map<std::string, CalibrationRecord> by_id;
  items.reserve(records.size());
  for (CalibrationRecord& r : records) {
    items.push_back(TestItem{r.id, r.prompt, r.cheap_answer, r.uncertainty, r.cheap_tokens});
    by_id.emplace(r.id, std::move(r));
  }

  std::optional<gw::OpenAiClient> expert;
  if (!a.endpoint.empty()) expert.emplace(gw::EndpointConfig::from_json_file(a.endpoint));
  const AnswerExtractor extractor = make_extractor(a.extract);

  const ExpertClient expert_fn = [&](const TestItem& item) -> ExpertReply {
    if (expert) {
      const gw::Completion c = expert->complete(item.prompt, "expert");
      return ExpertReply{canonical_answer(c.text, extractor), c.completion_tokens};
    }
    const CalibrationRecord& rec = by_id.at(item.id);
    if (rec.expert_answer)
      return ExpertReply{*rec.expert_answer, rec.expert_tokens.value_or(0)};
    throw TransportError("no expert endpoint and record '" + item.id +
                         "' stores no expert answer");
  };

  const RouteResult result = route(items, policy, expert_fn, a.max_parallel);

  {
    std::ofstream dec(a.decisions, std::ios::binary | std::ios::trunc);
    if (!dec) throw IngestError("cannot write '" + a.decisions + "'");
    for (const RoutingDecision& d : result.decisions) {
      dec << json{{"id", d.id},
                  {"used_expert", d.used_expert},
                  {"final_answer", d.final_answer},
                  {"uncertainty", d.uncertainty},
                  {"threshold", d.threshold}}
                 .dump()
          << '\n';
    }
  }

  // Efficiency needs the expert token count of every item (the cost-ratio
  // denominator).  Live replies fill it for escalated items; when the rest
  // lack a stored count, fall back to the expert share alone.
  for (std::size_t i = 0; i < result.decisions.size(); ++i) {
    if (result.decisions[i].used_expert && result.expert_replies[i].tokens > 0)
      by_id[result.decisions[i].id].expert_tokens = result.expert_replies[i].tokens;
  }
  json report{{"n_items", items.size()},
              {"n_routed", result.decisions.size()},
              {"n_failures", result.failures.size()},
              {"threshold", policy.threshold},
              {"feasible", policy.feasible}};
  try {
    const EfficiencyReport eff = efficiency_metrics(result.decisions, by_id);
    report["ecp_percent"] = eff.ecp_percent;
    report["stp_percent"] = eff.stp_percent;
  } catch (const Error&) {
    std::size_t expert_count = 0;
    for (const RoutingDecision& d : result.decisions) expert_count += d.used_expert ? 1 : 0;
    if (!result.decisions.empty())
      report["ecp_percent"] =
          100.0 * static_cast<double>(expert_count) / static_cast<double>(result.decisions.size());
  }
  // Realized risk is computable only when every cheap-kept item carries a
  // precomputed loss.
  {
    std::unordered_map<std::string, double> losses;
    bool complete = true;
    for (const RoutingDecision& d : result.decisions) {
      if (d.used_expert) continue;
      const CalibrationRecord& rec = by_id.at(d.id);
      if (rec.loss) {
        losses.emplace(d.id, *rec.loss);
      } else {
        complete = false;
        break;
      }
    }
    if (complete && !result.decisions.empty())
      report["empirical_risk"] = empirical_risk(result.decisions, losses);
  }
  json failures = json::array();
  for (const RouteFailure& f : result.failures)
    failures.push_back(json{{"id", f.id}, {"error", f.error}});
  report["failures"] = failures;

  if (!a.report.empty()) {
    std::ofstream rep(a.report, std::ios::binary | std::ios::trunc);
    if (!rep) throw IngestError("cannot write '" + a.report + "'");
    rep << report.dump(2) << '\n';
  }

  json inputs{{"records", input_entry(a.records)}, {"policy", input_entry(a.policy)}};
  if (!a.endpoint.empty()) inputs["endpoint"] = input_entry(a.endpoint);
  write_manifest(a.decisions, "route", inputs,
                 json{{"max_parallel", a.max_parallel},
                      {"extract", a.extract},
                      {"report", a.report},
                      {"n_items", items.size()}},
                 json::object());

  out << "routed " << result.decisions.size() << " of " << items.size() << " items, "
      << report.value("ecp_percent", 0.0) << "% to the expert\n";
  if (!result.failures.empty()) {
    for (const RouteFailure& f : result.failures)
      err << "failed: " << f.id << ": " << f.error << '\n';
    return kTransport;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// simulate: synthetic scenarios with analytically known risk.

struct SimulateArgs {
  std::string scenario;
  std::string mode = "coverage";
  std::string output;
  std::vector<std::size_t> m_values;
  std::size_t reps = 0;      // 0 -> keep scenario value
  std::uint64_t seed = 0;    // used only when seed_set
  bool seed_set = false;
  std::size_t threads = 0;
  bool table = false;
};

json transductive_to_json(const sim::TransductiveReport& r) {
  return json{{"n_items", r.n_items},
              {"reps", r.reps},
              {"epsilon", r.epsilon},
              {"bound", r.bound},
              {"dataset_mean_loss", r.dataset_mean_loss},
              {"coverage", r.coverage},
              {"floor", r.floor},
              {"pass", r.pass},
              {"mean_expert_fraction", r.mean_expert_fraction},
              {"mean_threshold", r.mean_threshold}};
}

json validity_to_json(const sim::UcbValidityReport& r) {
  json cov = json::array();
  for (const std::vector<double>& row : r.coverage) cov.push_back(row);
  return json{{"scenario", r.scenario}, {"bound", r.bound},     {"m_values", r.m_values},
              {"grid", r.grid},         {"targets", r.targets}, {"coverage", cov},
              {"reps", r.reps},         {"alpha", r.alpha}};
}

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  sim::SimScenario scenario = sim::load_scenario(a.scenario);
  if (a.reps > 0) scenario.reps = a.reps;
  if (a.seed_set) scenario.base_seed = a.seed;
  if (a.threads > 0) scenario.threads = a.threads;
  scenario.validate();

  json report;
  bool passed = true;
  if (a.mode == "coverage") {
    const sim::CoverageReport r = sim::coverage_experiment(scenario);
    report = json::parse(r.to_json());
    passed = !r.assertions_run || r.passed;
    if (a.table) out << r.to_table();
    out << "coverage " << r.pac_coverage << " (floor " << r.pac_floor << "), mean true risk "
        << r.mean_true_risk << ", feasible rate " << r.feasible_rate << '\n';
  } else if (a.mode == "transductive") {
    const sim::TransductiveReport r = sim::transductive_experiment(scenario);
    report = transductive_to_json(r);
    passed = r.pass;
    out << "transductive coverage " << r.coverage << " (floor " << r.floor
        << "), mean expert fraction " << r.mean_expert_fraction << '\n';
  } else {
    std::vector<std::size_t> m_values = a.m_values;
    if (m_values.empty()) m_values = {100, 1000, 10000};
    const sim::UcbValidityReport r = sim::ucb_validity_experiment(scenario, m_values);
    report = validity_to_json(r);
    for (std::size_t mi = 0; mi < r.m_values.size(); ++mi) {
      double worst = 1.0;
      for (double c : r.coverage[mi]) worst = std::min(worst, c);
      out << "m " << r.m_values[mi] << ": worst grid coverage " << worst << '\n';
    }
  }

  if (!a.output.empty()) {
    std::ofstream f(a.output, std::ios::binary | std::ios::trunc);
    if (!f) throw IngestError("cannot write '" + a.output + "'");
    f << report.dump(2) << '\n';
    write_manifest(a.output, "simulate", json{{"scenario", input_entry(a.scenario)}},
                   json{{"mode", a.mode},
                        {"reps", scenario.reps},
                        {"threads", scenario.threads},
                        {"name", scenario.name}},
                   json{{"base_seed", scenario.base_seed}});
  }
  return passed ? kOk : kInfeasible;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"risk-controlled model routing"};
  app.name("pacroute");
  app.require_subcommand(1);

  ScoreArgs sc;
  CLI::App* score = app.add_subcommand("score", "run the cheap model and score uncertainty");
  score->add_option("--input", sc.input, "items JSONL: {id, prompt, gold?}")->required();
  score->add_option("--endpoint", sc.endpoint, "endpoint config JSON")->required();
  score->add_option("--output", sc.output, "records JSONL to write")->required();
  score->add_option("--score-kind", sc.kind, "uncertainty family")
      ->check(CLI::IsMember({"logits", "verbalized"}));
  score->add_option("--trials", sc.trials, "verbalized confidence trials")
      ->check(CLI::PositiveNumber);
  score->add_option("--extract", sc.extract, "answer extractor")
      ->check(CLI::IsMember({"none", "boxed"}));

  CalibrateArgs ca;
  CLI::App* cal = app.add_subcommand("calibrate", "select a threshold under a risk budget");
  cal->add_option("--records", ca.records, "scored records JSONL")->required();
  cal->add_option("--output", ca.output, "policy JSON to write")->required();
  cal->add_option("--epsilon", ca.epsilon, "tolerated expected loss")->required();
  cal->add_option("--alpha", ca.alpha, "confidence level complement");
  cal->add_option("--bound", ca.bound, "bound flavor")
      ->check(CLI::IsMember({"clt", "hoeffding"}));
  cal->add_option("--loss", ca.loss, "loss family")
      ->check(CLI::IsMember({"binary", "semantic"}));
  cal->add_option("--loss-upper", ca.loss_upper, "a-priori loss cap (default 1, semantic 2)");
  cal->add_option("--pi", ca.pi, "per-draw query probability");
  cal->add_option("--sample-size", ca.sample_size, "draws m (0: n/pi, or n without replacement)");
  cal->add_flag("--without-replacement", ca.without_replacement,
                "use each record at most once");
  cal->add_option("--seed", ca.seed, "sampling seed");
  cal->add_option("--endpoint", ca.endpoint, "expert endpoint config for live losses");
  cal->add_option("--embed-endpoint", ca.embed_endpoint, "embedding endpoint (semantic loss)");
  cal->add_option("--extract", ca.extract, "answer extractor for live expert answers")
      ->check(CLI::IsMember({"none", "boxed"}));

  RouteArgs ro;
  CLI::App* rt = app.add_subcommand("route", "apply a policy to scored items");
  rt->add_option("--records", ro.records, "scored records JSONL")->required();
  rt->add_option("--policy", ro.policy, "policy JSON")->required();
  rt->add_option("--decisions", ro.decisions, "decisions JSONL to write")->required();
  rt->add_option("--report", ro.report, "efficiency report JSON to write");
  rt->add_option("--endpoint", ro.endpoint, "expert endpoint config");
  rt->add_option("--max-parallel", ro.max_parallel, "concurrent expert requests")
      ->check(CLI::PositiveNumber);
  rt->add_option("--extract", ro.extract, "answer extractor for live expert answers")
      ->check(CLI::IsMember({"none", "boxed"}));

  SimulateArgs si;
  CLI::App* sm = app.add_subcommand("simulate", "synthetic ground-truth experiments");
  sm->add_option("--scenario", si.scenario, "scenario config (TOML or JSON)")->required();
  sm->add_option("--mode", si.mode, "experiment kind")
      ->check(CLI::IsMember({"coverage", "transductive", "validity"}));
  sm->add_option("--reps", si.reps, "override scenario repetitions");
  sm->add_option("--seed", si.seed, "override scenario base seed")
      ->trigger_on_parse()
      ->each([&si](const std::string&) { si.seed_set = true; });
  sm->add_option("--threads", si.threads, "override worker count");
  sm->add_option("--m-values", si.m_values, "sample counts for validity mode")
      ->delimiter(',');
  sm->add_option("--output", si.output, "report JSON to write");
  sm->add_flag("--table", si.table, "print the per-threshold coverage table");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfig;
  }

  try {
    if (score->parsed()) return run_score(sc, out);
    if (cal->parsed()) return run_calibrate(ca, out, err);
    if (rt->parsed()) return run_route(ro, out, err);
    return run_simulate(si, out);
  } catch (const TransportError& e) {
    err << "error: " << e.what() << '\n';
    return kTransport;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  }
}

}  // namespace pacr::cli
