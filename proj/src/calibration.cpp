#include "pacr/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace pacr {

using nlohmann::json;

void ThresholdPolicy::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw RangeError("policy: threshold must lie in [0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw RangeError("policy: alpha must lie in (0, 1)");
  if (!(epsilon >= 0.0)) throw RangeError("policy: epsilon must be >= 0");
  if (!feasible && threshold != 0.0)
    throw RangeError("policy: infeasible policy must carry threshold 0");
}

std::vector<double> make_grid(std::span<const CalibrationRecord> records) {
  if (records.empty()) throw EmptyInputError("make_grid: no records");
  std::set<double> distinct;
  for (const auto& r : records) {
    if (!(r.uncertainty >= 0.0 && r.uncertainty <= 1.0))
      throw RangeError("make_grid: uncertainty of '" + r.id + "' outside [0, 1]");
    distinct.insert(r.uncertainty);
  }
  return std::vector<double>(distinct.begin(), distinct.end());
}

ThresholdPolicy select_threshold(const UcbCurve& curve, const RiskBudget& budget) {
  budget.validate();
  if (curve.grid.empty() || curve.grid.size() != curve.bounds.size())
    throw EmptyInputError("select_threshold: curve has no usable grid");

  ThresholdPolicy policy;
  policy.bound_kind = curve.kind;
  policy.alpha = curve.alpha;
  policy.epsilon = budget.epsilon;
  policy.sample_count = curve.sample_count;
  policy.seed = curve.seed;
  policy.curve_digest = curve.digest();

  // Full scan from the top: the curve is not guaranteed monotone, so binary
  // search could stop at a local dip.
  for (std::size_t i = curve.grid.size(); i-- > 0;) {
    if (curve.bounds[i] <= budget.epsilon) {
      policy.threshold = curve.grid[i];
      policy.feasible = true;
      return policy;
    }
  }
  policy.threshold = 0.0;
  policy.feasible = false;
  return policy;
}

CalibrationResult calibrate(std::span<const CalibrationRecord> records, const SamplingPlan& plan,
                            const RiskBudget& budget, BoundKind kind, const LossOracle& oracle) {
  budget.validate();
  CalibrationResult result;
  result.samples = draw_samples(records, plan, oracle, budget.loss_upper);
  const std::vector<double> grid = make_grid(records);
  result.curve = build_curve(result.samples, grid, make_bound_spec(kind, budget, plan));
  result.curve.seed = plan.seed;
  result.policy = select_threshold(result.curve, budget);
  return result;
}

TransductiveResult transductive_label(std::span<const CalibrationRecord> records,
                                      const SamplingPlan& plan, const RiskBudget& budget,
                                      BoundKind kind, const LossOracle& loss_oracle,
                                      const ExpertTextOracle& expert_oracle) {
  if (!expert_oracle) throw ConfigError("transductive_label: expert oracle not set");
  CalibrationResult cal = calibrate(records, plan, budget, kind, loss_oracle);

  TransductiveResult out;
  out.policy = cal.policy;
  std::vector<std::string> unfinished;
  for (const auto& r : records) {
    if (r.uncertainty >= out.policy.threshold || !out.policy.feasible) {
      try {
        out.labels[r.id] = expert_oracle(r);
        ++out.expert_labeled;
      } catch (const std::exception&) {
        unfinished.push_back(r.id);
      }
    } else {
      out.labels[r.id] = r.cheap_answer;
    }
  }
  if (!unfinished.empty())
    throw PartialResultError("transductive_label: expert query failed for " +
                                 std::to_string(unfinished.size()) + " item(s)",
                             std::move(unfinished));
  return out;
}

bool empirical_bound_check(const ThresholdPolicy& policy, double test_risk,
                           const RiskBudget& budget, std::size_t n_test, double slack) {
  (void)policy;
  (void)n_test;
  budget.validate();
  if (!(slack > 0.0)) throw RangeError("empirical_bound_check: slack must be positive");
  return test_risk <= budget.epsilon + slack;
}

double empirical_bound_floor(const RiskBudget& budget, std::size_t n_test, double slack) {
  budget.validate();
  if (!(slack > 0.0)) throw RangeError("empirical_bound_floor: slack must be positive");
  if (n_test == 0) throw EmptyInputError("empirical_bound_floor: n_test must be positive");
  const double range = budget.loss_upper - budget.loss_lower;
  const double exponent =
      -2.0 * static_cast<double>(n_test) * slack * slack / (range * range);
  return 1.0 - budget.alpha - std::exp(exponent);
}

// --------------------------------------------------------------------------
// Serialization.

std::string policy_to_json(const ThresholdPolicy& policy) {
  json j;
  j["threshold"] = policy.threshold;
  j["feasible"] = policy.feasible;
  j["bound_kind"] = to_string(policy.bound_kind);
  j["alpha"] = policy.alpha;
  j["epsilon"] = policy.epsilon;
  j["sample_count"] = policy.sample_count;
  j["seed"] = policy.seed;
  j["curve_digest"] = policy.curve_digest;
  j["score_kind"] = policy.score_kind;
  return j.dump(2) + "\n";
}

ThresholdPolicy policy_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("policy: invalid JSON: ") + e.what());
  }
  ThresholdPolicy p;
  try {
    p.threshold = j.at("threshold").get<double>();
    p.feasible = j.at("feasible").get<bool>();
    p.bound_kind = bound_kind_from_string(j.at("bound_kind").get<std::string>());
    p.alpha = j.at("alpha").get<double>();
    p.epsilon = j.at("epsilon").get<double>();
    p.sample_count = j.at("sample_count").get<std::size_t>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.curve_digest = j.value("curve_digest", std::string{});
    p.score_kind = j.value("score_kind", std::string{});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("policy: missing or mistyped field: ") + e.what());
  }
  p.validate();
  return p;
}

void save_policy(const ThresholdPolicy& policy, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("policy: cannot open '" + path + "' for writing");
  out << policy_to_json(policy);
  if (!out) throw ConfigError("policy: write to '" + path + "' failed");
}

ThresholdPolicy load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("policy: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return policy_from_json(text);
}

}  // namespace pacr
