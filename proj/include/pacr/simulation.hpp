// simulation.hpp -- synthetic scenarios with analytically known risk.
//
// No language model anywhere: a scenario is a joint law for (uncertainty,
// loss, token counts).  Because the law is known, the true cumulative error
// at any threshold is a one-dimensional integral, which makes the module the
// ground-truth check for the coverage guarantees the calibration stage
// promises.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pacr/calibration.hpp"
#include "pacr/core.hpp"
#include "pacr/ucb.hpp"

namespace pacr::sim {

struct BetaLaw {
  double a = 1.0;
  double b = 1.0;
};

// Conditional loss given uncertainty u.  Both variants have a non-decreasing
// conditional mean, so a higher score really is worse.
struct LossLaw {
  enum class Kind { kBernoulliSigmoid, kClampGauss };
  Kind kind = Kind::kBernoulliSigmoid;
  // kBernoulliSigmoid: loss ~ Bernoulli(sigmoid(gain * (u - midpoint)))
  double gain = 8.0;
  double midpoint = 0.6;
  // kClampGauss: loss = clamp(offset + slope * u + noise * N(0,1), 0, 1)
  double offset = 0.0;
  double slope = 1.0;
  double noise = 0.0;
};

// Token counts for the efficiency metrics: the expert always spends
// expert_tokens, the cheap model a ratio of that.
struct TokenLaw {
  long long expert_tokens = 1000;
  double ratio_mean = 0.35;
  double ratio_sd = 0.0;
};

// How the sampling stage treats the calibration set.  kPopulation draws every
// sampled record fresh from the law (the infinite-calibration limit); the
// finite modes exercise the plan exactly as production calibration would.
enum class SamplingMode { kWithReplacement, kWithoutReplacement, kPopulation };

std::string to_string(SamplingMode m);
SamplingMode sampling_mode_from_string(const std::string& s);

struct SimScenario {
  std::string name = "scenario";
  std::size_t n_cal = 500;
  std::size_t n_test = 500;
  std::size_t reps = 1000;
  std::uint64_t base_seed = 1;
  BetaLaw uncertainty;
  LossLaw loss;
  RiskBudget budget;
  double pi = 0.5;
  std::size_t sample_size = 0;  // 0 -> ceil(n_cal / pi)
  SamplingMode sampling = SamplingMode::kWithReplacement;
  BoundKind bound = BoundKind::kClt;
  double holdout_slack = 0.05;
  TokenLaw tokens;
  std::vector<double> coverage_grid;  // empty -> deciles of the uncertainty law
  std::size_t threads = 0;            // 0 -> hardware concurrency

  std::size_t effective_sample_size() const;
  void validate() const;
};

// ---------------------------------------------------------------------------
// Analytic side.

double conditional_mean_loss(const LossLaw& law, double u);

// E[loss * 1{U <= u}] under the scenario laws, by adaptive quadrature
// (relative tolerance far below the Monte Carlo noise it is compared to).
// This is both the cumulative-error target of the UCB and, for continuous U,
// the risk of routing at threshold u.
double true_risk(const SimScenario& scenario, double u);

// Deciles q10..q90 of the uncertainty law: the fixed grid for UCB coverage.
std::vector<double> law_deciles(const BetaLaw& law);

// ---------------------------------------------------------------------------
// Experiments.

struct UcbPoint {
  double u = 0.0;
  double target = 0.0;    // true cumulative error at u
  double coverage = 0.0;  // fraction of reps with target <= bound
  double floor = 0.0;     // required coverage after the 2-SE allowance
  bool pass = false;
};

struct CoverageReport {
  std::string scenario;
  std::string bound;
  std::string sampling;
  std::size_t reps = 0;
  std::size_t n_cal = 0;
  std::size_t n_test = 0;
  std::size_t sample_size = 0;
  double pi = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;

  double pac_coverage = 0.0;  // fraction of reps with true risk(threshold) <= epsilon
  double pac_floor = 0.0;
  bool pac_pass = false;

  std::vector<UcbPoint> ucb;
  bool ucb_pass = false;

  double mean_true_risk = 0.0;
  double mean_test_risk = 0.0;
  double mean_ecp = 0.0;
  double mean_stp = 0.0;
  double mean_threshold = 0.0;
  double feasible_rate = 0.0;

  double holdout_slack = 0.0;
  double holdout_fraction = 0.0;  // fraction of reps with test risk <= epsilon + slack
  double holdout_floor = 0.0;
  bool holdout_pass = false;

  bool assertions_run = false;  // false when reps < 100: report only
  bool passed = false;          // conjunction of the asserted checks

  std::string to_json() const;
  std::string to_table() const;
};

// Full pipeline per repetition: draw calibration set, sample losses, build
// the curve, select the threshold, evaluate true risk and a fresh test set.
CoverageReport coverage_experiment(const SimScenario& scenario);

// Fraction of reps whose held-out empirical risk stays within epsilon+slack.
double empirical_bound_experiment(const SimScenario& scenario, double slack);

// ---------------------------------------------------------------------------
// Transductive experiment: one fixed dataset, fresh algorithm randomness per
// repetition, final cumulative error measured on the dataset itself.

struct TransductiveReport {
  std::size_t n_items = 0;
  std::size_t reps = 0;
  double epsilon = 0.0;
  std::string bound;
  double dataset_mean_loss = 0.0;  // cumulative error at threshold 1
  double coverage = 0.0;           // fraction of reps with final error <= epsilon
  double floor = 0.0;
  bool pass = false;
  double mean_expert_fraction = 0.0;
  double mean_threshold = 0.0;
};

TransductiveReport transductive_experiment(const SimScenario& scenario);

// ---------------------------------------------------------------------------
// Pointwise UCB validity at fixed thresholds, sweeping the sample count.
// Always uses population sampling: the bound's i.i.d. premise, with an
// analytic target.

struct UcbValidityReport {
  std::string scenario;
  std::string bound;
  std::vector<std::size_t> m_values;
  std::vector<double> grid;
  std::vector<double> targets;
  // coverage[mi][gi]: coverage at m_values[mi], grid[gi].
  std::vector<std::vector<double>> coverage;
  std::size_t reps = 0;
  double alpha = 0.0;
};

UcbValidityReport ucb_validity_experiment(const SimScenario& scenario,
                                          const std::vector<std::size_t>& m_values);

// Coverage floor for assertions: nominal level (minus the asymptotic
// allowance for the clt bound) minus two binomial standard errors.
double coverage_floor(BoundKind kind, double alpha, double observed, std::size_t reps);

// ---------------------------------------------------------------------------
// Scenario config files: JSON, or a flat TOML-style subset (key = value with
// optional [section] headers and dotted keys).  See README for the schema.

SimScenario load_scenario(const std::string& path);
SimScenario scenario_from_json_text(const std::string& text);

}  // namespace pacr::sim
