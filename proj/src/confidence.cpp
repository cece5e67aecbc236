#include "triad/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "triad/error.hpp"

namespace triad {

std::vector<double> softmax(std::span<const double> logits) {
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      throw Error(ErrorKind::kNonFiniteLogit, "logit " + std::to_string(i) + " is not finite");
    }
  }
  std::vector<double> probs(logits.size());
  if (logits.empty()) return probs;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - top);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

ConfidenceScore max_prob(std::span<const double> logits, std::size_t record_id) {
  if (logits.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "max-prob needs at least two classes");
  }
  ConfidenceScore out;
  out.record_id = record_id;
  out.probs = softmax(logits);
  // First maximum wins ties.
  auto top = std::max_element(logits.begin(), logits.end());
  out.predicted_class = static_cast<int>(top - logits.begin());
  out.max_prob = out.probs[static_cast<std::size_t>(out.predicted_class)];
  return out;
}

ConfidenceScore max_prob(std::span<const float> logits, std::size_t record_id) {
  std::vector<double> wide(logits.begin(), logits.end());
  return max_prob(std::span<const double>(wide), record_id);
}

}  // namespace triad
