// core.hpp -- domain types, loss functions and efficiency metrics.
//
// The router decides per input whether the cheap model's answer stands or the
// expert model must be called.  Everything downstream is phrased in terms of a
// per-item loss between the cheap answer and the expert answer; these are the
// shared types that carry that data around.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pacr/errors.hpp"

namespace pacr {

// Tolerated expected loss (epsilon) at confidence level 1 - alpha, together
// with the a-priori loss range [loss_lower, loss_upper] the bound math needs.
struct RiskBudget {
  double epsilon = 0.08;
  double alpha = 0.05;
  double loss_lower = 0.0;
  double loss_upper = 1.0;

  void validate() const {
    if (!(epsilon >= 0.0)) throw RangeError("RiskBudget: epsilon must be >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw RangeError("RiskBudget: alpha must lie in (0, 1)");
    if (!(loss_lower < loss_upper))
      throw RangeError("RiskBudget: loss_lower must be < loss_upper");
  }
};

// One calibration item.  Expert fields are optional because the expert is
// queried lazily: only items picked by the sampling stage ever need them.
// A record may also carry a precomputed loss without the expert answer that
// produced it (datasets scored offline).
struct CalibrationRecord {
  std::string id;
  double uncertainty = 0.0;
  std::string cheap_answer;
  long long cheap_tokens = 0;
  std::string prompt;                         // optional; needed for live expert queries
  std::optional<std::string> expert_answer;
  std::optional<long long> expert_tokens;
  std::optional<double> loss;
  std::optional<std::string> gold_answer;
  std::string score_kind;                     // "logits", "verbalized" or "" (unspecified)
  std::vector<std::string> flags;
};

// Outcome of routing one test item at a fixed threshold.
struct RoutingDecision {
  std::string id;
  bool used_expert = false;
  std::string final_answer;
  double uncertainty = 0.0;
  double threshold = 0.0;
};

// Aggregate efficiency of a routed batch.  ecp_percent is the share of items
// escalated to the expert; stp_percent is the token saving relative to running
// the expert everywhere (100 * (1 - mean per-item cost ratio), negative when
// routing costs more than always-expert); empirical_risk is filled by callers
// who can compute losses.
struct EfficiencyReport {
  double ecp_percent = 0.0;
  double stp_percent = 0.0;
  std::optional<double> empirical_risk;
  std::size_t n_test = 0;
};

// ---------------------------------------------------------------------------
// Answer canonicalization.  Losses compare already-canonicalized strings;
// the extractor hook lets callers strip answer wrappers before the exact
// match (extract_boxed handles the \boxed{...} convention of math datasets).

using AnswerExtractor = std::function<std::string(const std::string&)>;

std::string trim_copy(const std::string& s);
std::string extract_boxed(const std::string& s);
std::string canonical_answer(const std::string& s, const AnswerExtractor& extractor = nullptr);

// ---------------------------------------------------------------------------
// Losses.

// 1 when the expert got it right and the candidate did not; 0 otherwise.
// Scoring against an expert that is itself wrong would punish the candidate
// for a disagreement that costs nothing, hence the reference gate.
double binary_loss(const std::string& candidate, const std::string& reference,
                   const std::string& gold);

// 1 - cosine similarity of two embedding vectors; range [0, 2].
double semantic_loss(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Risk and efficiency.

// Mean realized loss of a decision batch.  Expert-routed items contribute 0
// (the final answer is the reference itself); cheap-routed items take their
// loss from the map and a missing entry is an error.
double empirical_risk(std::span<const RoutingDecision> decisions,
                      const std::unordered_map<std::string, double>& losses);

// ECP / STP over a routed batch.  Needs expert token counts for every item
// (the cost-ratio denominator), not only the escalated ones.
EfficiencyReport efficiency_metrics(std::span<const RoutingDecision> decisions,
                                    const std::unordered_map<std::string, CalibrationRecord>& records);

}  // namespace pacr
