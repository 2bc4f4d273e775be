// uncertainty.hpp -- per-answer uncertainty scores in [0, 1].
//
// Two score families: one from the token probabilities of the generated
// answer, one from self-reported confidences collected over repeated trials.
// Higher always means less trustworthy.
#pragma once

#include <vector>

#include "pacr/errors.hpp"

namespace pacr {

// Per-token probabilities of the generated answer, already exponentiated
// (the gateway converts logprobs before handing them over).  Every element
// must lie in (0, 1].
struct TokenProbs {
  std::vector<double> probs;
};

// Self-reported confidences in [0, 1], one per trial; parse failures are
// recorded as confidence 0 plus a flag upstream, so the math here never sees
// a gap.
struct VerbalizedTrials {
  std::vector<double> confidences;
};

// 1 - mean token probability.  Lives in [0, 1).
double logits_uncertainty(const TokenProbs& tp);

// 1 - mean self-reported confidence.  Lives in [0, 1].
double verbalized_uncertainty(const VerbalizedTrials& vt);

}  // namespace pacr
