#include "pacr/core.hpp"

#include <cctype>
#include <cmath>

namespace pacr {

std::string trim_copy(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Returns the content of the last \boxed{...} group, brace-balanced; the
// input unchanged when no such group exists.
std::string extract_boxed(const std::string& s) {
  const std::string needle = "\\boxed{";
  const std::size_t pos = s.rfind(needle);
  if (pos == std::string::npos) return s;
  std::size_t i = pos + needle.size();
  int depth = 1;
  std::string out;
  while (i < s.size() && depth > 0) {
    const char c = s[i];
    if (c == '{') ++depth;
    if (c == '}') {
      --depth;
      if (depth == 0) break;
    }
    out.push_back(c);
    ++i;
  }
  if (depth != 0) return s;  // unbalanced; fall back to the raw string
  return out;
}

std::string canonical_answer(const std::string& s, const AnswerExtractor& extractor) {
  if (extractor) return trim_copy(extractor(s));
  return trim_copy(s);
}

double binary_loss(const std::string& candidate, const std::string& reference,
                   const std::string& gold) {
  const bool reference_correct = (reference == gold);
  const bool candidate_correct = (candidate == gold);
  return (reference_correct && !candidate_correct) ? 1.0 : 0.0;
}

double semantic_loss(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ShapeError("semantic_loss: embedding dimensions differ (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  if (a.empty()) throw EmptyInputError("semantic_loss: empty embeddings");
  long double dot = 0.0L, na = 0.0L, nb = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  if (na == 0.0L || nb == 0.0L)
    throw InvalidEmbeddingError("semantic_loss: zero-norm embedding");
  const long double cos = dot / (std::sqrt(static_cast<double>(na)) *
                                 std::sqrt(static_cast<double>(nb)));
  return static_cast<double>(1.0L - cos);
}

double empirical_risk(std::span<const RoutingDecision> decisions,
                      const std::unordered_map<std::string, double>& losses) {
  if (decisions.empty()) throw UndefinedRiskError("empirical_risk: empty decision batch");
  long double acc = 0.0L;
  for (const auto& d : decisions) {
    if (d.used_expert) continue;  // final answer equals the reference; loss 0
    const auto it = losses.find(d.id);
    if (it == losses.end())
      throw IncompleteRecordError("empirical_risk: no loss for cheap-routed id '" + d.id + "'");
    acc += it->second;
  }
  return static_cast<double>(acc / static_cast<long double>(decisions.size()));
}

EfficiencyReport efficiency_metrics(std::span<const RoutingDecision> decisions,
                                    const std::unordered_map<std::string, CalibrationRecord>& records) {
  if (decisions.empty()) throw EmptyInputError("efficiency_metrics: empty decision batch");

  std::size_t expert_count = 0;
  long double ratio_acc = 0.0L;
  for (const auto& d : decisions) {
    const auto it = records.find(d.id);
    if (it == records.end())
      throw IncompleteRecordError("efficiency_metrics: no record for id '" + d.id + "'");
    const CalibrationRecord& rec = it->second;
    if (!rec.expert_tokens.has_value())
      throw IncompleteRecordError("efficiency_metrics: record '" + d.id +
                                  "' lacks expert_tokens (needed for the cost denominator)");
    const long long ref_tokens = *rec.expert_tokens;
    if (ref_tokens <= 0)
      throw DegenerateDivisionError("efficiency_metrics: record '" + d.id +
                                    "' has non-positive expert_tokens");
    long double spent = static_cast<long double>(rec.cheap_tokens);
    if (d.used_expert) {
      ++expert_count;
      spent += static_cast<long double>(ref_tokens);
    }
    ratio_acc += spent / static_cast<long double>(ref_tokens);
  }

  const auto n = static_cast<long double>(decisions.size());
  EfficiencyReport report;
  report.n_test = decisions.size();
  report.ecp_percent = static_cast<double>(100.0L * expert_count / n);
  report.stp_percent = static_cast<double>(100.0L * (1.0L - ratio_acc / n));
  return report;
}

}  // namespace pacr
