#include "pacr/uncertainty.hpp"

#include <string>

namespace pacr {

double logits_uncertainty(const TokenProbs& tp) {
  if (tp.probs.empty())
    throw EmptyInputError("logits_uncertainty: answer has no tokens");
  long double acc = 0.0L;
  for (double p : tp.probs) {
    if (!(p > 0.0 && p <= 1.0))
      throw RangeError("logits_uncertainty: token probability " + std::to_string(p) +
                       " outside (0, 1]");
    acc += p;
  }
  return static_cast<double>(1.0L - acc / static_cast<long double>(tp.probs.size()));
}

double verbalized_uncertainty(const VerbalizedTrials& vt) {
  if (vt.confidences.empty())
    throw EmptyInputError("verbalized_uncertainty: no trials");
  long double acc = 0.0L;
  for (double c : vt.confidences) {
    if (!(c >= 0.0 && c <= 1.0))
      throw RangeError("verbalized_uncertainty: confidence " + std::to_string(c) +
                       " outside [0, 1]");
    acc += c;
  }
  return static_cast<double>(1.0L - acc / static_cast<long double>(vt.confidences.size()));
}

}  // namespace pacr
