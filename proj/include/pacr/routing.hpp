// routing.hpp -- apply a calibrated policy to fresh items.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pacr/calibration.hpp"
#include "pacr/core.hpp"

namespace pacr {

// One unrouted test item.  uncertainty must come from the same score family
// the policy was calibrated on (the policy records which one).
struct TestItem {
  std::string id;
  std::string prompt;
  std::string cheap_answer;
  double uncertainty = 0.0;
  long long cheap_tokens = 0;
};

struct ExpertReply {
  std::string text;
  long long tokens = 0;
};

using ExpertClient = std::function<ExpertReply(const TestItem&)>;

struct RouteFailure {
  std::string id;
  std::string error;
};

struct RouteResult {
  std::vector<RoutingDecision> decisions;        // input order, failures omitted
  std::vector<RouteFailure> failures;
  std::vector<ExpertReply> expert_replies;       // parallel to decisions; empty text for cheap
};

// Routes each item: uncertainty >= policy.threshold escalates to the expert,
// anything below keeps the cheap answer.  The expert client is invoked at
// most once per distinct id; failures are collected per item rather than
// aborting the batch.  max_parallel > 1 fetches expert answers concurrently
// while preserving input order in the result.
RouteResult route(std::span<const TestItem> items, const ThresholdPolicy& policy,
                  const ExpertClient& expert, std::size_t max_parallel = 1);

}  // namespace pacr
