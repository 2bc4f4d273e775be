#include "pacr/routing.hpp"

#include <unordered_map>

#include "pacr/parallel.hpp"

namespace pacr {

RouteResult route(std::span<const TestItem> items, const ThresholdPolicy& policy,
                  const ExpertClient& expert, std::size_t max_parallel) {
  policy.validate();
  if (!expert) throw ConfigError("route: expert client not set");

  // Which items escalate, deduplicated by id so one id is fetched once.
  std::vector<bool> escalate(items.size(), false);
  std::unordered_map<std::string, std::size_t> fetch_slot;  // id -> index of first occurrence
  std::vector<std::size_t> fetch_order;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!(items[i].uncertainty >= 0.0 && items[i].uncertainty <= 1.0))
      throw RangeError("route: uncertainty of '" + items[i].id + "' outside [0, 1]");
    escalate[i] = items[i].uncertainty >= policy.threshold;
    if (escalate[i] && fetch_slot.emplace(items[i].id, i).second) fetch_order.push_back(i);
  }

  struct Fetched {
    bool ok = false;
    ExpertReply reply;
    std::string error;
  };
  std::vector<Fetched> fetched(items.size());
  parallel_for(
      fetch_order.size(),
      [&](std::size_t k) {
        const std::size_t i = fetch_order[k];
        try {
          fetched[i].reply = expert(items[i]);
          fetched[i].ok = true;
        } catch (const std::exception& e) {
          fetched[i].error = e.what();
        }
      },
      max_parallel == 0 ? 1 : max_parallel);

  RouteResult result;
  result.decisions.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const TestItem& item = items[i];
    RoutingDecision d;
    d.id = item.id;
    d.uncertainty = item.uncertainty;
    d.threshold = policy.threshold;
    d.used_expert = escalate[i];
    if (!escalate[i]) {
      d.final_answer = item.cheap_answer;
      result.decisions.push_back(std::move(d));
      result.expert_replies.push_back({});
      continue;
    }
    const Fetched& f = fetched[fetch_slot.at(item.id)];
    if (!f.ok) {
      result.failures.push_back({item.id, f.error});
      continue;
    }
    d.final_answer = f.reply.text;
    result.decisions.push_back(std::move(d));
    result.expert_replies.push_back(f.reply);
  }
  return result;
}

}  // namespace pacr
