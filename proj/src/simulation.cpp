#include "pacr/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "pacr/parallel.hpp"
#include "pacr/rng.hpp"
#include "pacr/stats.hpp"

namespace pacr::sim {

using nlohmann::json;

std::string to_string(SamplingMode m) {
  switch (m) {
    case SamplingMode::kWithReplacement: return "with_replacement";
    case SamplingMode::kWithoutReplacement: return "without_replacement";
    case SamplingMode::kPopulation: return "population";
  }
  return "with_replacement";
}

SamplingMode sampling_mode_from_string(const std::string& s) {
  if (s == "with_replacement") return SamplingMode::kWithReplacement;
  if (s == "without_replacement") return SamplingMode::kWithoutReplacement;
  if (s == "population") return SamplingMode::kPopulation;
  throw ConfigError("unknown sampling mode '" + s + "'");
}

std::size_t SimScenario::effective_sample_size() const {
  if (sample_size > 0) return sample_size;
  return static_cast<std::size_t>(
      std::llround(std::ceil(static_cast<double>(n_cal) / pi)));
}

void SimScenario::validate() const {
  budget.validate();
  if (n_cal == 0) throw RangeError("scenario: n_cal must be positive");
  if (reps == 0) throw RangeError("scenario: reps must be positive");
  if (!(pi > 0.0 && pi <= 1.0)) throw RangeError("scenario: pi must lie in (0, 1]");
  if (!(uncertainty.a > 0.0 && uncertainty.b > 0.0))
    throw RangeError("scenario: beta law parameters must be positive");
  if (loss.kind == LossLaw::Kind::kBernoulliSigmoid) {
    if (loss.gain < 0.0) throw RangeError("scenario: sigmoid gain must be >= 0");
  } else {
    if (loss.slope < 0.0) throw RangeError("scenario: loss slope must be >= 0");
    if (loss.noise < 0.0) throw RangeError("scenario: loss noise must be >= 0");
  }
  if (sampling == SamplingMode::kWithoutReplacement && effective_sample_size() > n_cal)
    throw RangeError("scenario: without replacement needs sample_size <= n_cal");
  if (tokens.expert_tokens <= 0) throw RangeError("scenario: expert_tokens must be positive");
}

// ---------------------------------------------------------------------------
// Laws.

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

// Mean of clamp(X, 0, 1) for X ~ N(mu, s^2).
double clamped_normal_mean(double mu, double s) {
  if (s == 0.0) return clamp01(mu);
  const double lo = (0.0 - mu) / s;
  const double hi = (1.0 - mu) / s;
  return 1.0 * (1.0 - normal_cdf(hi)) + mu * (normal_cdf(hi) - normal_cdf(lo)) -
         s * (normal_pdf(hi) - normal_pdf(lo));
}

double draw_loss(const LossLaw& law, Rng& rng, double u) {
  if (law.kind == LossLaw::Kind::kBernoulliSigmoid)
    return bernoulli(rng, sigmoid(law.gain * (u - law.midpoint))) ? 1.0 : 0.0;
  if (law.noise == 0.0) return clamp01(law.offset + law.slope * u);
  return clamp01(law.offset + law.slope * u + law.noise * normal01(rng));
}

}  // namespace

double conditional_mean_loss(const LossLaw& law, double u) {
  if (law.kind == LossLaw::Kind::kBernoulliSigmoid)
    return sigmoid(law.gain * (u - law.midpoint));
  return clamped_normal_mean(law.offset + law.slope * u, law.noise);
}

double true_risk(const SimScenario& scenario, double u) {
  if (u <= 0.0) return 0.0;
  if (u > 1.0) u = 1.0;
  const boost::math::beta_distribution<double> dist(scenario.uncertainty.a,
                                                    scenario.uncertainty.b);
  const auto integrand = [&](double t) {
    return conditional_mean_loss(scenario.loss, t) * boost::math::pdf(dist, t);
  };
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, 0.0, u, 12,
                                                                       1e-10);
}

std::vector<double> law_deciles(const BetaLaw& law) {
  const boost::math::beta_distribution<double> dist(law.a, law.b);
  std::vector<double> out;
  out.reserve(9);
  for (int k = 1; k <= 9; ++k)
    out.push_back(boost::math::quantile(dist, 0.1 * static_cast<double>(k)));
  return out;
}

// ---------------------------------------------------------------------------
// Shared repetition runner.

namespace {

struct RepOutcome {
  double threshold = 0.0;
  bool feasible = false;
  double true_r = 0.0;
  double test_risk = 0.0;
  double ecp = 0.0;
  double stp = 0.0;
  std::vector<double> fixed_grid_bounds;
};

std::vector<double> fixed_grid_of(const SimScenario& s) {
  if (!s.coverage_grid.empty()) return s.coverage_grid;
  return law_deciles(s.uncertainty);
}

// Fresh importance samples straight from the law: the infinite-calibration
// limit of the sampling stage.
std::vector<WeightedLossSample> population_samples(const SimScenario& s, std::size_t m, Rng& rng) {
  std::vector<WeightedLossSample> samples(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double u = beta_draw(rng, s.uncertainty.a, s.uncertainty.b);
    const double loss = draw_loss(s.loss, rng, u);
    WeightedLossSample& ws = samples[j];
    ws.index = j;
    ws.uncertainty = u;
    ws.queried = bernoulli(rng, s.pi);
    if (ws.queried) ws.weighted_loss = std::min(loss, s.budget.loss_upper) / s.pi;
  }
  return samples;
}

RepOutcome run_rep(const SimScenario& s, std::size_t rep, const std::vector<double>& fixed_grid) {
  Rng rng = make_rng(derive_seed(s.base_seed, rep));
  const std::size_t m = s.effective_sample_size();

  // Calibration set: grid source, and the records the finite modes sample.
  std::vector<CalibrationRecord> records(s.n_cal);
  for (std::size_t i = 0; i < s.n_cal; ++i) {
    CalibrationRecord& r = records[i];
    r.id = "c" + std::to_string(i);
    r.uncertainty = beta_draw(rng, s.uncertainty.a, s.uncertainty.b);
    r.loss = draw_loss(s.loss, rng, r.uncertainty);
    r.expert_answer = "expert";
    r.cheap_answer = "cheap";
  }

  std::vector<WeightedLossSample> samples;
  if (s.sampling == SamplingMode::kPopulation) {
    samples = population_samples(s, m, rng);
  } else {
    SamplingPlan plan;
    plan.weights.assign(s.n_cal, s.pi);
    plan.sample_size = m;
    plan.seed = derive_seed(derive_seed(s.base_seed, rep), 0x5A);
    plan.with_replacement = (s.sampling == SamplingMode::kWithReplacement);
    const LossOracle oracle = [](const CalibrationRecord& rec) { return *rec.loss; };
    samples = draw_samples(records, plan, oracle, s.budget.loss_upper);
  }

  SamplingPlan spec_plan;  // only min-weight matters for the bound spec
  spec_plan.weights.assign(1, s.pi);
  const BoundSpec spec = make_bound_spec(s.bound, s.budget, spec_plan);

  const std::vector<double> grid = make_grid(records);
  const UcbCurve curve = build_curve(samples, grid, spec);
  const ThresholdPolicy policy = select_threshold(curve, s.budget);

  RepOutcome out;
  out.threshold = policy.threshold;
  out.feasible = policy.feasible;
  out.true_r = policy.feasible ? true_risk(s, policy.threshold) : 0.0;

  const UcbCurve fg = build_curve(samples, fixed_grid, spec);
  out.fixed_grid_bounds = fg.bounds;

  // Fresh test set.
  std::size_t escalated = 0;
  long double risk_acc = 0.0L, cost_acc = 0.0L;
  for (std::size_t i = 0; i < s.n_test; ++i) {
    const double u = beta_draw(rng, s.uncertainty.a, s.uncertainty.b);
    const double loss = draw_loss(s.loss, rng, u);
    double ratio = s.tokens.ratio_mean;
    if (s.tokens.ratio_sd > 0.0) ratio += s.tokens.ratio_sd * normal01(rng);
    if (ratio < 0.01) ratio = 0.01;
    const long long expert_tokens = s.tokens.expert_tokens;
    const long long cheap_tokens =
        std::max<long long>(1, std::llround(ratio * static_cast<double>(expert_tokens)));
    const bool escalate = !policy.feasible || u >= policy.threshold;
    long double spent = cheap_tokens;
    if (escalate) {
      ++escalated;
      spent += expert_tokens;
    } else {
      risk_acc += loss;
    }
    cost_acc += spent / static_cast<long double>(expert_tokens);
  }
  const auto n = static_cast<long double>(s.n_test);
  out.test_risk = static_cast<double>(risk_acc / n);
  out.ecp = static_cast<double>(100.0L * escalated / n);
  out.stp = static_cast<double>(100.0L * (1.0L - cost_acc / n));
  return out;
}

}  // namespace

double coverage_floor(BoundKind kind, double alpha, double observed, std::size_t reps) {
  const double allowance = kind == BoundKind::kClt ? 0.02 : 0.0;
  return 1.0 - alpha - allowance - 2.0 * binomial_se(observed, reps);
}

CoverageReport coverage_experiment(const SimScenario& scenario) {
  scenario.validate();
  const std::vector<double> fixed_grid = fixed_grid_of(scenario);

  std::vector<RepOutcome> outcomes(scenario.reps);
  parallel_for(
      scenario.reps, [&](std::size_t rep) { outcomes[rep] = run_rep(scenario, rep, fixed_grid); },
      scenario.threads);

  CoverageReport rpt;
  rpt.scenario = scenario.name;
  rpt.bound = pacr::to_string(scenario.bound);
  rpt.sampling = to_string(scenario.sampling);
  rpt.reps = scenario.reps;
  rpt.n_cal = scenario.n_cal;
  rpt.n_test = scenario.n_test;
  rpt.sample_size = scenario.effective_sample_size();
  rpt.pi = scenario.pi;
  rpt.epsilon = scenario.budget.epsilon;
  rpt.alpha = scenario.budget.alpha;
  rpt.holdout_slack = scenario.holdout_slack;

  std::size_t pac_ok = 0, feasible = 0, holdout_ok = 0;
  long double tr = 0.0L, sr = 0.0L, ecp = 0.0L, stp = 0.0L, th = 0.0L;
  for (const auto& o : outcomes) {
    if (o.true_r <= scenario.budget.epsilon) ++pac_ok;
    if (o.feasible) ++feasible;
    if (o.test_risk <= scenario.budget.epsilon + scenario.holdout_slack) ++holdout_ok;
    tr += o.true_r;
    sr += o.test_risk;
    ecp += o.ecp;
    stp += o.stp;
    th += o.threshold;
  }
  const auto r = static_cast<long double>(scenario.reps);
  rpt.pac_coverage = static_cast<double>(pac_ok) / static_cast<double>(scenario.reps);
  rpt.feasible_rate = static_cast<double>(feasible) / static_cast<double>(scenario.reps);
  rpt.holdout_fraction = static_cast<double>(holdout_ok) / static_cast<double>(scenario.reps);
  rpt.mean_true_risk = static_cast<double>(tr / r);
  rpt.mean_test_risk = static_cast<double>(sr / r);
  rpt.mean_ecp = static_cast<double>(ecp / r);
  rpt.mean_stp = static_cast<double>(stp / r);
  rpt.mean_threshold = static_cast<double>(th / r);

  rpt.ucb.resize(fixed_grid.size());
  for (std::size_t g = 0; g < fixed_grid.size(); ++g) {
    UcbPoint& pt = rpt.ucb[g];
    pt.u = fixed_grid[g];
    pt.target = true_risk(scenario, fixed_grid[g]);
    std::size_t covered = 0;
    for (const auto& o : outcomes)
      if (pt.target <= o.fixed_grid_bounds[g]) ++covered;
    pt.coverage = static_cast<double>(covered) / static_cast<double>(scenario.reps);
    pt.floor = coverage_floor(scenario.bound, scenario.budget.alpha, pt.coverage, scenario.reps);
    pt.pass = pt.coverage >= pt.floor;
  }

  rpt.pac_floor =
      coverage_floor(scenario.bound, scenario.budget.alpha, rpt.pac_coverage, scenario.reps);
  rpt.pac_pass = rpt.pac_coverage >= rpt.pac_floor;
  rpt.ucb_pass = std::all_of(rpt.ucb.begin(), rpt.ucb.end(),
                             [](const UcbPoint& p) { return p.pass; });
  const double holdout_theory =
      empirical_bound_floor(scenario.budget, scenario.n_test, scenario.holdout_slack);
  rpt.holdout_floor = holdout_theory - 2.0 * binomial_se(rpt.holdout_fraction, scenario.reps);
  rpt.holdout_pass = rpt.holdout_fraction >= rpt.holdout_floor;

  rpt.assertions_run = scenario.reps >= 100;
  rpt.passed = !rpt.assertions_run || (rpt.pac_pass && rpt.ucb_pass && rpt.holdout_pass);
  return rpt;
}

double empirical_bound_experiment(const SimScenario& scenario, double slack) {
  if (!(slack > 0.0)) throw RangeError("empirical_bound_experiment: slack must be positive");
  SimScenario s = scenario;
  s.holdout_slack = slack;
  return coverage_experiment(s).holdout_fraction;
}

// ---------------------------------------------------------------------------

TransductiveReport transductive_experiment(const SimScenario& scenario) {
  scenario.validate();

  // One fixed dataset; only the algorithm's randomness varies across reps.
  Rng drng = make_rng(derive_seed(scenario.base_seed, 0xDA7A5E7ull));
  std::vector<CalibrationRecord> records(scenario.n_cal);
  long double total_loss = 0.0L;
  for (std::size_t i = 0; i < scenario.n_cal; ++i) {
    CalibrationRecord& r = records[i];
    r.id = "t" + std::to_string(i);
    r.uncertainty = beta_draw(drng, scenario.uncertainty.a, scenario.uncertainty.b);
    r.loss = draw_loss(scenario.loss, drng, r.uncertainty);
    r.cheap_answer = "cheap-" + r.id;
    r.expert_answer = "expert-" + r.id;
    total_loss += *r.loss;
  }

  const LossOracle loss_oracle = [](const CalibrationRecord& rec) { return *rec.loss; };
  const ExpertTextOracle expert_oracle = [](const CalibrationRecord& rec) {
    return *rec.expert_answer;
  };

  struct Rep {
    double final_error = 0.0;
    double threshold = 0.0;
    double expert_fraction = 0.0;
  };
  std::vector<Rep> reps(scenario.reps);
  parallel_for(
      scenario.reps,
      [&](std::size_t rep) {
        SamplingPlan plan;
        plan.weights.assign(scenario.n_cal, scenario.pi);
        plan.sample_size = scenario.effective_sample_size();
        plan.seed = derive_seed(scenario.base_seed, 0xF1000000ull + rep);
        plan.with_replacement = (scenario.sampling != SamplingMode::kWithoutReplacement);
        const TransductiveResult res = transductive_label(
            records, plan, scenario.budget, scenario.bound, loss_oracle, expert_oracle);
        long double err = 0.0L;
        for (const auto& r : records)
          if (res.policy.feasible && r.uncertainty <= res.policy.threshold) err += *r.loss;
        reps[rep].final_error =
            static_cast<double>(err / static_cast<long double>(scenario.n_cal));
        reps[rep].threshold = res.policy.threshold;
        reps[rep].expert_fraction = static_cast<double>(res.expert_labeled) /
                                    static_cast<double>(scenario.n_cal);
      },
      scenario.threads);

  TransductiveReport out;
  out.n_items = scenario.n_cal;
  out.reps = scenario.reps;
  out.epsilon = scenario.budget.epsilon;
  out.bound = pacr::to_string(scenario.bound);
  out.dataset_mean_loss =
      static_cast<double>(total_loss / static_cast<long double>(scenario.n_cal));
  std::size_t ok = 0;
  long double ef = 0.0L, th = 0.0L;
  for (const auto& r : reps) {
    if (r.final_error <= scenario.budget.epsilon) ++ok;
    ef += r.expert_fraction;
    th += r.threshold;
  }
  out.coverage = static_cast<double>(ok) / static_cast<double>(scenario.reps);
  out.mean_expert_fraction =
      static_cast<double>(ef / static_cast<long double>(scenario.reps));
  out.mean_threshold = static_cast<double>(th / static_cast<long double>(scenario.reps));
  out.floor = coverage_floor(scenario.bound, scenario.budget.alpha, out.coverage, scenario.reps);
  out.pass = out.coverage >= out.floor;
  return out;
}

// ---------------------------------------------------------------------------

UcbValidityReport ucb_validity_experiment(const SimScenario& scenario,
                                          const std::vector<std::size_t>& m_values) {
  scenario.validate();
  if (m_values.empty()) throw EmptyInputError("ucb_validity_experiment: no sample counts");

  UcbValidityReport rpt;
  rpt.scenario = scenario.name;
  rpt.bound = pacr::to_string(scenario.bound);
  rpt.m_values = m_values;
  rpt.grid = fixed_grid_of(scenario);
  rpt.reps = scenario.reps;
  rpt.alpha = scenario.budget.alpha;
  rpt.targets.reserve(rpt.grid.size());
  for (double u : rpt.grid) rpt.targets.push_back(true_risk(scenario, u));

  SamplingPlan spec_plan;
  spec_plan.weights.assign(1, scenario.pi);
  const BoundSpec spec = make_bound_spec(scenario.bound, scenario.budget, spec_plan);

  for (std::size_t mi = 0; mi < m_values.size(); ++mi) {
    const std::size_t m = m_values[mi];
    if (m < 2) throw RangeError("ucb_validity_experiment: sample counts must be >= 2");
    std::vector<std::vector<double>> bounds(scenario.reps);
    parallel_for(
        scenario.reps,
        [&](std::size_t rep) {
          Rng rng = make_rng(derive_seed(scenario.base_seed, (mi + 1) * 0x10000000ull + rep));
          const std::vector<WeightedLossSample> samples = population_samples(scenario, m, rng);
          bounds[rep] = build_curve(samples, rpt.grid, spec).bounds;
        },
        scenario.threads);
    std::vector<double> cov(rpt.grid.size(), 0.0);
    for (std::size_t g = 0; g < rpt.grid.size(); ++g) {
      std::size_t covered = 0;
      for (const auto& b : bounds)
        if (rpt.targets[g] <= b[g]) ++covered;
      cov[g] = static_cast<double>(covered) / static_cast<double>(scenario.reps);
    }
    rpt.coverage.push_back(std::move(cov));
  }
  return rpt;
}

// ---------------------------------------------------------------------------
// Report rendering.

std::string CoverageReport::to_json() const {
  json j;
  j["scenario"] = scenario;
  j["bound"] = bound;
  j["sampling"] = sampling;
  j["reps"] = reps;
  j["n_cal"] = n_cal;
  j["n_test"] = n_test;
  j["sample_size"] = sample_size;
  j["pi"] = pi;
  j["epsilon"] = epsilon;
  j["alpha"] = alpha;
  j["pac_coverage"] = pac_coverage;
  j["pac_floor"] = pac_floor;
  j["pac_pass"] = pac_pass;
  json pts = json::array();
  for (const auto& p : ucb) {
    json pj;
    pj["u"] = p.u;
    pj["target"] = p.target;
    pj["coverage"] = p.coverage;
    pj["floor"] = p.floor;
    pj["pass"] = p.pass;
    pts.push_back(pj);
  }
  j["ucb_coverage"] = pts;
  j["ucb_pass"] = ucb_pass;
  j["mean_true_risk"] = mean_true_risk;
  j["mean_test_risk"] = mean_test_risk;
  j["mean_ecp"] = mean_ecp;
  j["mean_stp"] = mean_stp;
  j["mean_threshold"] = mean_threshold;
  j["feasible_rate"] = feasible_rate;
  j["holdout_slack"] = holdout_slack;
  j["holdout_fraction"] = holdout_fraction;
  j["holdout_floor"] = holdout_floor;
  j["holdout_pass"] = holdout_pass;
  j["assertions_run"] = assertions_run;
  j["passed"] = passed;
  return j.dump(2) + "\n";
}

std::string CoverageReport::to_table() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "scenario %s | bound %s | sampling %s | reps %zu\n",
                scenario.c_str(), bound.c_str(), sampling.c_str(), reps);
  os << line;
  std::snprintf(line, sizeof(line),
                "n_cal %zu  n_test %zu  m %zu  pi %.3f  epsilon %.4f  alpha %.3f\n", n_cal,
                n_test, sample_size, pi, epsilon, alpha);
  os << line;
  std::snprintf(line, sizeof(line), "pac_coverage %.4f (floor %.4f) %s\n", pac_coverage,
                pac_floor, pac_pass ? "ok" : "FAIL");
  os << line;
  os << "      u    target  coverage     floor\n";
  for (const auto& p : ucb) {
    std::snprintf(line, sizeof(line), " %6.4f  %8.5f    %6.4f    %6.4f %s\n", p.u, p.target,
                  p.coverage, p.floor, p.pass ? "ok" : "FAIL");
    os << line;
  }
  std::snprintf(line, sizeof(line),
                "mean: true_risk %.5f  test_risk %.5f  ecp %.2f%%  stp %.2f%%  threshold %.4f\n",
                mean_true_risk, mean_test_risk, mean_ecp, mean_stp, mean_threshold);
  os << line;
  std::snprintf(line, sizeof(line), "feasible_rate %.4f\n", feasible_rate);
  os << line;
  std::snprintf(line, sizeof(line), "held-out risk <= epsilon+%.3f in %.4f (floor %.4f) %s\n",
                holdout_slack, holdout_fraction, holdout_floor, holdout_pass ? "ok" : "FAIL");
  os << line;
  std::snprintf(line, sizeof(line), "assertions %s: %s\n",
                assertions_run ? "run" : "skipped (reps < 100)",
                passed ? "PASS" : "FAIL");
  os << line;
  return os.str();
}

}  // namespace pacr::sim
