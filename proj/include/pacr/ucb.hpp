// ucb.hpp -- importance-sampled loss estimates and upper confidence bounds.
//
// The calibration stage never labels every record.  Each draw picks a record
// uniformly and queries its loss only with probability pi; a queried loss is
// reweighted by 1/pi so the estimate stays unbiased:
//
//   z_j = loss / pi          if queried,
//   z_j = 0                  otherwise,
//   z_j(u) = z_j * 1{U_j <= u}.
//
// mean_j z_j(u) is an unbiased estimate of the cumulative error at threshold
// u, and the two bound flavors put a one-sided confidence band on it:
//
//   clt:        mean + z_{1-alpha} * stddev / sqrt(m)          (asymptotic)
//   hoeffding:  mean + sqrt(R^2 * log(2/alpha) / (2m)),        (finite-sample)
//               R = loss_cap / min_i pi_i
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pacr/core.hpp"

namespace pacr {

enum class BoundKind { kClt, kHoeffding };

std::string to_string(BoundKind k);
BoundKind bound_kind_from_string(const std::string& s);

// How to sample calibration records.  weights[i] is the query probability of
// record i.  The default plan queries with constant pi = 0.5 and draws
// m = n / pi indices with replacement; without_replacement is an alternative
// design that uses each record at most once (m <= n).
struct SamplingPlan {
  std::vector<double> weights;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  bool with_replacement = true;
};

SamplingPlan default_plan(std::size_t n_records, double pi = 0.5, std::uint64_t seed = 0);

// One draw: which record, whether its loss was queried, the reweighted loss
// and the record's uncertainty (needed to build z_j(u) at any threshold).
struct WeightedLossSample {
  std::size_t index = 0;
  bool queried = false;
  double weighted_loss = 0.0;
  double uncertainty = 0.0;
};

// Bound evaluated on a shared sample set at every grid threshold.
// Invariants: grid strictly increasing; means non-decreasing along the grid;
// bounds[i] >= means[i].
struct UcbCurve {
  std::vector<double> grid;
  std::vector<double> means;
  std::vector<double> bounds;
  BoundKind kind = BoundKind::kClt;
  double alpha = 0.05;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  // Grid positions where the sample stddev was exactly 0 and the clt bound
  // degenerated to the plain mean; calibration warns on these.
  std::vector<std::size_t> degenerate_sigma;

  // Stable digest of (kind, alpha, grid, bounds); recorded in policies so a
  // policy can be traced back to the curve it was selected from.
  std::string digest() const;
};

using LossOracle = std::function<double(const CalibrationRecord&)>;

// Runs the sampling stage.  The loss oracle is invoked only for queried
// draws; oracle failures surface as SampleDrawError carrying the draw
// position.  When loss_cap is set, queried losses are capped at it before
// reweighting.  Deterministic: same plan + records => identical samples.
std::vector<WeightedLossSample> draw_samples(std::span<const CalibrationRecord> records,
                                             const SamplingPlan& plan,
                                             const LossOracle& loss_oracle,
                                             std::optional<double> loss_cap = std::nullopt);

// Scalar bounds at a single threshold u.
double clt_bound(std::span<const WeightedLossSample> samples, double u, double alpha);
double hoeffding_bound(std::span<const WeightedLossSample> samples, double u, double alpha,
                       double loss_cap, double min_weight);

// Parameters build_curve needs beyond the samples: which bound, at what
// level, and the loss range / weight floor the hoeffding slack depends on.
struct BoundSpec {
  BoundKind kind = BoundKind::kClt;
  double alpha = 0.05;
  double loss_cap = 1.0;
  double min_weight = 0.5;
};

BoundSpec make_bound_spec(BoundKind kind, const RiskBudget& budget, const SamplingPlan& plan);

// Evaluates the bound at every grid point from one fixed sample set (the
// curve for threshold selection).  grid must be sorted, distinct, within
// [0, 1].  Matches the scalar bounds pointwise.
UcbCurve build_curve(std::span<const WeightedLossSample> samples, std::span<const double> grid,
                     const BoundSpec& spec);

}  // namespace pacr
