#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "triad/confidence.hpp"
#include "triad/error.hpp"

namespace triad {
namespace {

TEST(Softmax, Examples) {
  EXPECT_EQ(softmax(std::vector{0.0, 0.0}), (std::vector{0.5, 0.5}));
  const auto p = softmax(std::vector{2.0, 0.0});
  EXPECT_NEAR(p[0], 0.8807970779778824, 1e-15);
  EXPECT_NEAR(p[1], 0.11920292202211755, 1e-15);
  const auto big = softmax(std::vector{1000.0, 0.0});
  EXPECT_TRUE(std::isfinite(big[0]) && std::isfinite(big[1]));
  EXPECT_NEAR(big[0], 1.0, 1e-15);
  EXPECT_NEAR(big[1], 0.0, 1e-15);
}

TEST(Softmax, RejectsNonFinite) {
  for (double bad : {std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::infinity()}) {
    try {
      softmax(std::vector{0.0, bad});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kNonFiniteLogit);
    }
  }
}

TEST(MaxProb, Examples) {
  EXPECT_DOUBLE_EQ(max_prob(std::vector{0.0, 0.0, 0.0, 0.0}).max_prob, 0.25);
  const auto s = max_prob(std::vector{2.0, 0.0});
  EXPECT_NEAR(s.max_prob, 0.8807970779778824, 1e-15);
  EXPECT_EQ(s.predicted_class, 0);
  EXPECT_EQ(max_prob(std::vector{3.0, 3.0}).predicted_class, 0);
  EXPECT_EQ(max_prob(std::vector{1.0f, 3.0f, 3.0f}).predicted_class, 1);
  EXPECT_THROW(max_prob(std::vector{1.0}), Error);
}

TEST(MaxProb, Invariants) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n(0, 3);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t c = 2 + rng() % 6;
    std::vector<double> logits(c);
    for (double& v : logits) v = n(rng);
    const auto s = max_prob(logits);
    EXPECT_NEAR(std::accumulate(s.probs.begin(), s.probs.end(), 0.0), 1.0, 1e-9);
    for (double p : s.probs) {
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
    }
    EXPECT_GE(s.max_prob, 1.0 / static_cast<double>(c) - 1e-15);
    const auto top = std::max_element(logits.begin(), logits.end()) - logits.begin();
    EXPECT_EQ(s.predicted_class, top);
    EXPECT_EQ(std::max_element(s.probs.begin(), s.probs.end()) - s.probs.begin(), top);

    std::vector<double> shifted = logits;
    const double k = n(rng) * 100;
    for (double& v : shifted) v += k;
    EXPECT_NEAR(max_prob(shifted).max_prob, s.max_prob, 1e-12);

    std::vector<double> raised = logits;
    raised[top] += std::abs(n(rng));
    EXPECT_GE(max_prob(raised).max_prob, s.max_prob);
  }
}

}  // namespace
}  // namespace triad
