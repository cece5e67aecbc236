// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "triad/bow.hpp"
#include "triad/checksum.hpp"
#include "triad/detect.hpp"
#include "triad/error.hpp"
#include "triad/fileio.hpp"
#include "triad/gauss.hpp"
#include "triad/pack.hpp"
#include "triad/pipeline.hpp"

namespace {

using namespace triad;
using testing::Matrix;

struct Outcome {
  bool ok = true;
  std::string detail;
};

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// d <= 5, C <= 3, M <= 50; means, covariance and scores within 1e-9 relative.
Outcome gaussian_oracle() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0, 1);
  double worst = 0.0;
  const int instances = 150;
  for (int t = 0; t < instances; ++t) {
    const int d = 1 + static_cast<int>(rng() % 5);
    const int classes = 2 + static_cast<int>(rng() % 2);
    const int m = 2 * classes + static_cast<int>(rng() % (51 - 2 * classes));
    Matrix rows(m, std::vector<double>(d));
    Eigen::MatrixXd x(m, d);
    std::vector<int> labels(m);
    for (int i = 0; i < m; ++i) {
      labels[i] = i < 2 * classes ? i % classes : static_cast<int>(rng() % classes);
      for (int k = 0; k < d; ++k) x(i, k) = rows[i][k] = 3 * n(rng) + 2 * labels[i];
    }
    const LayerGaussian g = fit_layer_gaussian(x, labels, classes);
    const auto oracle = testing::naive_fit(rows, labels, classes);
    for (int c = 0; c < classes; ++c) {
      for (int k = 0; k < d; ++k) worst = std::max(worst, rel_err(g.class_means()(c, k), oracle.means[c][k]));
    }
    Matrix reg = oracle.cov;
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) worst = std::max(worst, rel_err(g.tied_cov()(a, b), oracle.cov[a][b]));
      reg[a][a] += g.regularization();
    }
    const double log_det = testing::naive_log_det(reg);
    const Matrix inv = testing::naive_inverse(reg);
    for (int q = 0; q < 10; ++q) {
      std::vector<double> h(d);
      for (double& v : h) v = 4 * n(rng);
      int arg = -1;
      const double expect = testing::naive_score(oracle.means, inv, log_det, h, &arg);
      const LayerScore got = gaussian_score(g, h);
      worst = std::max(worst, rel_err(got.score, expect));
      if (got.argmax_class != arg) return {false, "argmax differs"};
    }
  }
  std::ostringstream s;
  s << instances << " instances, max rel err " << worst;
  return {worst <= 1e-9, s.str()};
}

// >= 1000 cases, n <= 200, exact equality with the pairwise count.
Outcome auroc_exactness() {
  std::mt19937_64 rng(77);
  int cases = 0;
  auto check = [&](const std::vector<double>& pos, const std::vector<double>& neg) {
    ++cases;
    return auroc(pos, neg) == testing::pairwise_auroc(pos, neg).value();
  };
  for (int t = 0; t < 1200; ++t) {
    const std::size_t total = 2 + rng() % 199;
    const std::size_t np = 1 + rng() % (total - 1);
    const int levels = 1 + t % 40;
    std::vector<double> pos(np), neg(total - np);
    for (double& v : pos) v = static_cast<double>(rng() % levels) / 7.0;
    for (double& v : neg) v = static_cast<double>(rng() % levels) / 7.0;
    if (!check(pos, neg)) return {false, "mismatch at case " + std::to_string(cases)};
  }
  for (std::size_t nn = 1; nn <= 100; ++nn) {
    std::vector<double> same(nn, 0.25), neg(200 - nn, 0.25);
    if (!check(same, neg) || auroc(same, neg) != 0.5) return {false, "all-tied case"};
    std::vector<double> hi(nn), lo(200 - nn);
    for (std::size_t i = 0; i < hi.size(); ++i) hi[i] = 10.0 + static_cast<double>(i);
    for (std::size_t i = 0; i < lo.size(); ++i) lo[i] = -static_cast<double>(i);
    if (!check(hi, lo) || auroc(hi, lo) != 1.0) return {false, "separated case"};
  }
  return {true, std::to_string(cases) + " cases exact"};
}

Outcome percentile_semantics() {
  std::vector<double> hundred(100);
  for (int i = 0; i < 100; ++i) hundred[i] = i + 1;
  if (percentile_threshold(hundred, 5) != 5.0) return {false, "{1..100} p=5 gave wrong value"};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pr(0.5, 99.5);
  int cases = 0;
  for (int t = 0; t < 3000; ++t, ++cases) {
    std::vector<double> s(1 + rng() % 50);
    for (double& v : s) v = static_cast<double>(rng() % (1 + t % 25));
    const double p = t % 3 == 0 ? 5.0 : pr(rng);
    if (percentile_threshold(s, p) != testing::brute_force_percentile(s, p)) {
      return {false, "mismatch at case " + std::to_string(t)};
    }
  }
  return {true, std::to_string(cases) + " brute-force cases, {1..100} p=5 -> 5"};
}

Outcome synthetic_cascade() {
  testing::SynthOptions o;  // d=32, L=12, C=2, N=500 per split
  const EmbeddingPack pack = testing::make_synthetic_pack(o);
  pipeline::FitOptions fo;
  fo.per_class = 8 * o.per_split;
  fo.aggregations = {Aggregation::kCls};
  fo.fit_bow = false;
  const auto fit = pipeline::fit_models(pack, fo);
  const LayerGaussian& l2 = pipeline::find_model(fit.models, Aggregation::kCls, 2);

  auto all = [&](SplitTag tag) { return pipeline::select_split(pack, tag, o.per_split, 0).split; };
  const auto dev = all(SplitTag::kIdDev), test = all(SplitTag::kIdTest);
  const auto ood = all(SplitTag::kOod), adv = all(SplitTag::kAdv);
  const CascadeConfig cfg = pipeline::blind_thresholds(dev, l2, 5.0);
  const EvalReport r = pipeline::evaluate_cascade(cfg, l2, test, ood, adv);

  const double s1 = r.find("stage1", "ood_vs_id_adv")->auroc;
  const double adv_l2 = r.find("stage1", "adv_vs_id")->auroc;
  const double s2 = r.find("stage2", "adv_vs_id")->auroc;
  std::ostringstream s;
  s << "stage1 " << s1 << " (>=0.99), adv-vs-id@L2 " << adv_l2 << " (<=0.6), stage2 " << s2
    << " (>=0.95), accuracy " << r.accuracy << " (>=0.90)";
  return {s1 >= 0.99 && adv_l2 <= 0.6 && s2 >= 0.95 && r.accuracy >= 0.90, s.str()};
}

bool detects(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind() == ErrorKind::kShapeMismatch || e.kind() == ErrorKind::kChecksumMismatch;
  }
  return false;
}

Outcome pack_round_trip() {
  int corruptions = 0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    testing::TempDir tmp("accept");
    const EmbeddingPack p = testing::make_random_pack(seed);
    write_pack(p, tmp.path());
    if (!bit_equal(p, read_pack(tmp.path()))) return {false, "pack " + std::to_string(seed)};
    std::vector<std::string> blobs = {kLogitsBlob};
    for (Aggregation agg : p.manifest.aggregations) blobs.push_back(feature_blob_name(agg));
    for (const std::string& blob : blobs) {
      const std::string original = read_file(tmp / blob);
      std::string cut = original.substr(0, original.size() - 1 - seed % 3);
      write_file_atomic(tmp / blob, cut);
      if (!detects([&] { read_pack(tmp.path()); })) return {false, "truncated " + blob};
      for (std::size_t at : {std::size_t{0}, original.size() / 2, original.size() - 1}) {
        std::string flipped = original;
        flipped[at] = static_cast<char>(flipped[at] ^ (1 << (seed % 8)));
        write_file_atomic(tmp / blob, flipped);
        if (!detects([&] { read_pack(tmp.path()); })) return {false, "flipped byte in " + blob};
        ++corruptions;
      }
      write_file_atomic(tmp / blob, original);
      ++corruptions;
    }
  }
  return {true, "20 packs bit-exact, " + std::to_string(corruptions) + " corruptions detected"};
}

Outcome bow_invariants() {
  using namespace triad::bow;
  const std::vector<std::vector<TokenId>> corpus = {{0, 1}, {0}};
  const IdfTable idf = fit_idf(corpus, 2);
  const std::vector<TokenId> aab = {0, 0, 1};
  const BowVector v = bow_vector(aab, idf);
  const double b_idf = std::log(1.5) + 1.0;
  const double norm = std::sqrt(4.0 + b_idf * b_idf);
  bool examples = std::abs(idf[0] - 1.0) < 1e-6 && std::abs(idf[1] - 1.405465) < 1e-6 &&
                  std::abs(v.entries[0].second - 0.81818) < 1e-5 &&
                  std::abs(v.entries[1].second - 0.57496) < 1e-5 &&
                  std::abs(v.entries[0].second - 2.0 / norm) < 1e-6;
  BowVector unit_x;
  unit_x.entries = {{0, 1.0}};
  unit_x.l2_norm = 1.0;
  examples = examples && std::abs(cosine_score(unit_x, BowCentroid{{2.0 / norm, b_idf / norm}}).value -
                                  2.0 / norm) < 1e-6;

  std::mt19937_64 rng(8);
  std::vector<std::vector<TokenId>> docs(200);
  for (auto& d : docs) {
    d.resize(1 + rng() % 15);
    for (auto& t : d) t = static_cast<TokenId>(rng() % 300);
  }
  const IdfTable big = fit_idf(docs, 300);
  std::vector<BowVector> vecs;
  double worst_norm = 0.0;
  for (const auto& d : docs) {
    vecs.push_back(bow_vector(d, big));
    worst_norm = std::max(worst_norm, std::abs(vecs.back().squared_norm() - 1.0));
  }
  const BowCentroid c = fit_centroid(vecs, 300);
  std::uniform_real_distribution<double> u(-5, 5);
  double worst_scale = 0.0;
  for (const BowVector& x : vecs) {
    BowVector scaled = x;
    const double alpha = std::exp(u(rng));
    for (auto& e : scaled.entries) e.second *= alpha;
    scaled.l2_norm *= alpha;
    worst_scale = std::max(worst_scale,
                           std::abs(cosine_score(scaled, c).value - cosine_score(x, c).value));
  }
  std::ostringstream s;
  s << "norm err " << worst_norm << ", scale err " << worst_scale
    << (examples ? ", examples ok" : ", examples WRONG");
  return {examples && worst_norm <= 1e-9 && worst_scale <= 1e-12, s.str()};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"gaussian-oracle-equivalence", 10, gaussian_oracle},
      {"auroc-exactness", 30, auroc_exactness},
      {"percentile-threshold-semantics", 0, percentile_semantics},
      {"synthetic-cascade-reproduction", 60, synthetic_cascade},
      {"pack-round-trip", 0, pack_round_trip},
      {"bow-invariants", 0, bow_invariants},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.ok = false;
      o.detail += " (over time budget)";
    }
    std::printf("%s %s [%.2fs] %s\n", o.ok ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
    failures += o.ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
