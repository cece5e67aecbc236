#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace triad {

struct ConfidenceScore {
  std::size_t record_id = 0;
  std::vector<double> probs;
  double max_prob = 0.0;
  int predicted_class = 0;
};

// Max-subtracted softmax, no temperature. Throws NonFiniteLogit.
std::vector<double> softmax(std::span<const double> logits);

// Throws NonFiniteLogit, or InvalidArgument when fewer than two logits are given.
ConfidenceScore max_prob(std::span<const double> logits, std::size_t record_id = 0);
ConfidenceScore max_prob(std::span<const float> logits, std::size_t record_id = 0);

}  // namespace triad
