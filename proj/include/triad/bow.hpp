#pragma once

// Bag-of-words input features: smooth IDF from in-distribution training text,
// L2-normalised TF-IDF sentence vectors, and cosine similarity to the
// training centroid.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace triad::bow {

using TokenId = std::int32_t;

struct IdfTable {
  std::size_t vocab_size = 0;
  std::vector<double> idf;  // idf[t] = ln((1 + D) / (1 + df(t))) + 1
  std::size_t doc_count = 0;

  double operator[](TokenId t) const { return idf[static_cast<std::size_t>(t)]; }
};

// Sparse vector sorted by token id.
struct BowVector {
  std::vector<std::pair<TokenId, double>> entries;
  double l2_norm = 0.0;  // norm before normalisation

  bool empty() const { return entries.empty(); }
  double squared_norm() const;
};

struct BowCentroid {
  std::vector<double> weights;  // dense, length V
};

struct CosineResult {
  double value = 0.0;
  bool degenerate = false;  // one of the vectors had zero norm
};

// Throws EmptyCorpus if no sequence has a token, OutOfVocabulary for ids outside [0, V).
IdfTable fit_idf(std::span<const std::vector<TokenId>> sequences, std::size_t vocab_size);

// Raw term counts weighted by IDF, then scaled to unit L2 norm.
BowVector bow_vector(std::span<const TokenId> tokens, const IdfTable& idf);

// Coordinatewise mean of the vectors; not re-normalised. Throws EmptyInput.
BowCentroid fit_centroid(std::span<const BowVector> vectors, std::size_t vocab_size);

CosineResult cosine_score(const BowVector& v, const BowCentroid& c);

// Alternative scoring: the best cosine against any single training vector.
// Disabled by default in the pipeline; reported to be weaker than the centroid.
CosineResult max_pairwise_cosine(const BowVector& v, std::span<const BowVector> train);

}  // namespace triad::bow
