#include "triad/bow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "triad/error.hpp"

namespace triad::bow {

namespace {

void check_token(TokenId t, std::size_t vocab_size) {
  if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
    throw Error(ErrorKind::kOutOfVocabulary, "token id " + std::to_string(t) +
                                                 " outside vocabulary of size " +
                                                 std::to_string(vocab_size));
  }
}

double dot(const BowVector& v, const BowCentroid& c) {
  double s = 0.0;
  for (const auto& [t, w] : v.entries) s += w * c.weights[static_cast<std::size_t>(t)];
  return s;
}

double sparse_dot(const BowVector& a, const BowVector& b) {
  double s = 0.0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      s += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return s;
}

}  // namespace

double BowVector::squared_norm() const {
  double s = 0.0;
  for (const auto& [t, w] : entries) s += w * w;
  return s;
}

IdfTable fit_idf(std::span<const std::vector<TokenId>> sequences, std::size_t vocab_size) {
  if (vocab_size == 0) throw Error(ErrorKind::kInvalidArgument, "vocabulary size must be >= 1");
  std::vector<std::size_t> df(vocab_size, 0);
  std::vector<TokenId> seen;
  bool any_tokens = false;
  for (const auto& seq : sequences) {
    seen.assign(seq.begin(), seq.end());
    for (TokenId t : seen) check_token(t, vocab_size);
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (TokenId t : seen) ++df[static_cast<std::size_t>(t)];
    any_tokens = any_tokens || !seen.empty();
  }
  if (!any_tokens) throw Error(ErrorKind::kEmptyCorpus, "no tokens in the IDF corpus");

  IdfTable table;
  table.vocab_size = vocab_size;
  table.doc_count = sequences.size();
  table.idf.resize(vocab_size);
  const double docs = static_cast<double>(table.doc_count);
  for (std::size_t t = 0; t < vocab_size; ++t) {
    table.idf[t] = std::log((1.0 + docs) / (1.0 + static_cast<double>(df[t]))) + 1.0;
  }
  return table;
}

BowVector bow_vector(std::span<const TokenId> tokens, const IdfTable& idf) {
  std::map<TokenId, std::size_t> counts;
  for (TokenId t : tokens) {
    check_token(t, idf.vocab_size);
    ++counts[t];
  }
  BowVector v;
  v.entries.reserve(counts.size());
  for (const auto& [t, n] : counts) v.entries.emplace_back(t, static_cast<double>(n) * idf[t]);
  v.l2_norm = std::sqrt(v.squared_norm());
  if (v.l2_norm > 0.0) {
    for (auto& entry : v.entries) entry.second /= v.l2_norm;
  }
  return v;
}

BowCentroid fit_centroid(std::span<const BowVector> vectors, std::size_t vocab_size) {
  if (vectors.empty()) throw Error(ErrorKind::kEmptyInput, "centroid of zero vectors");
  BowCentroid c;
  c.weights.assign(vocab_size, 0.0);
  for (const BowVector& v : vectors) {
    for (const auto& [t, w] : v.entries) {
      check_token(t, vocab_size);
      c.weights[static_cast<std::size_t>(t)] += w;
    }
  }
  const double n = static_cast<double>(vectors.size());
  for (double& w : c.weights) w /= n;
  return c;
}

CosineResult cosine_score(const BowVector& v, const BowCentroid& c) {
  const double nv = std::sqrt(v.squared_norm());
  double nc = 0.0;
  for (double w : c.weights) nc += w * w;
  nc = std::sqrt(nc);
  if (nv == 0.0 || nc == 0.0) return {0.0, true};
  return {std::clamp(dot(v, c) / (nv * nc), -1.0, 1.0), false};
}

CosineResult max_pairwise_cosine(const BowVector& v, std::span<const BowVector> train) {
  const double nv = std::sqrt(v.squared_norm());
  CosineResult best{0.0, true};
  if (nv == 0.0) return best;
  for (const BowVector& u : train) {
    const double nu = std::sqrt(u.squared_norm());
    if (nu == 0.0) continue;
    double s = std::clamp(sparse_dot(v, u) / (nv * nu), -1.0, 1.0);
    if (best.degenerate || s > best.value) best = {s, false};
  }
  return best;
}

}  // namespace triad::bow
