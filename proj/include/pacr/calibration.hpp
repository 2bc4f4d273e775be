// calibration.hpp -- threshold selection against a risk budget.
//
// Given a UCB curve over candidate thresholds, the selected threshold is the
// largest grid point whose bound stays within the budget.  When no point
// qualifies, the policy degrades safely: threshold 0 routes everything to the
// expert, which has zero loss by construction.
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "pacr/core.hpp"
#include "pacr/ucb.hpp"

namespace pacr {

// Calibrated routing policy plus the provenance needed to reproduce it.
// score_kind records which uncertainty family produced the calibration
// scores; routing refuses a policy whose family differs from the test data.
struct ThresholdPolicy {
  double threshold = 0.0;
  bool feasible = false;
  BoundKind bound_kind = BoundKind::kClt;
  double alpha = 0.05;
  double epsilon = 0.0;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  std::string curve_digest;
  std::string score_kind;  // "logits", "verbalized" or "" when unspecified

  void validate() const;
};

// Sorted distinct uncertainty values of a record set: the candidate grid.
std::vector<double> make_grid(std::span<const CalibrationRecord> records);

// Largest grid threshold whose bound is <= budget.epsilon.  Scans the whole
// grid (bounds need not be monotone).  Infeasible => threshold 0 and
// feasible=false.
ThresholdPolicy select_threshold(const UcbCurve& curve, const RiskBudget& budget);

// Convenience pipeline: draw samples, build the curve over the records' own
// grid, select the threshold.  Returns both so callers can print the curve.
struct CalibrationResult {
  UcbCurve curve;
  ThresholdPolicy policy;
  std::vector<WeightedLossSample> samples;
};

CalibrationResult calibrate(std::span<const CalibrationRecord> records, const SamplingPlan& plan,
                            const RiskBudget& budget, BoundKind kind, const LossOracle& oracle);

// ---------------------------------------------------------------------------
// Transductive variant: calibration set and target set are the same fixed
// dataset.  After selecting the threshold from sampled losses, every item at
// or above it gets the expert answer (querying now if the sampling stage did
// not already) and every item below keeps its cheap answer.

struct TransductiveResult {
  std::map<std::string, std::string> labels;  // id -> final answer text
  ThresholdPolicy policy;
  std::size_t expert_labeled = 0;
};

using ExpertTextOracle = std::function<std::string(const CalibrationRecord&)>;

TransductiveResult transductive_label(std::span<const CalibrationRecord> records,
                                      const SamplingPlan& plan, const RiskBudget& budget,
                                      BoundKind kind, const LossOracle& loss_oracle,
                                      const ExpertTextOracle& expert_oracle);

// ---------------------------------------------------------------------------
// A-posteriori check on a held-out batch: did the realized risk stay within
// epsilon plus slack?  The check succeeds with probability at least
// 1 - alpha - exp(-2 n t^2 / (b - a)^2); see empirical_bound_floor.

bool empirical_bound_check(const ThresholdPolicy& policy, double test_risk,
                           const RiskBudget& budget, std::size_t n_test, double slack);

// The probability floor the check is guaranteed to meet.
double empirical_bound_floor(const RiskBudget& budget, std::size_t n_test, double slack);

// ---------------------------------------------------------------------------
// Policy (de)serialization: a single flat JSON object.

std::string policy_to_json(const ThresholdPolicy& policy);
ThresholdPolicy policy_from_json(const std::string& json_text);
void save_policy(const ThresholdPolicy& policy, const std::string& path);
ThresholdPolicy load_policy(const std::string& path);

}  // namespace pacr
