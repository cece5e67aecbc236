#include "triad/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "triad/confidence.hpp"
#include "triad/error.hpp"

namespace triad {

std::string ScoreSource::describe() const {
  switch (kind) {
    case Kind::kGaussLayer:
      return "gauss(" + std::string(to_string(aggregation)) + ",layer=" + std::to_string(layer) +
             ")";
    case Kind::kMaxProb: return "max_prob";
    case Kind::kBowCosine: return "bow_cosine";
  }
  return "?";
}

Decision apply_detector(const ThresholdDetector& det, double score) {
  return score > det.threshold ? Decision::kPositive : Decision::kNegative;
}

void CascadeConfig::validate() const {
  if (stage1.source.kind != ScoreSource::Kind::kGaussLayer || stage1.source.layer < 1) {
    throw Error(ErrorKind::kInvalidArgument, "stage 1 must score a Gaussian layer");
  }
  if (stage2.source.kind != ScoreSource::Kind::kMaxProb) {
    throw Error(ErrorKind::kInvalidArgument, "stage 2 must score max-prob");
  }
  if (!std::isfinite(stage1.threshold) || !std::isfinite(stage2.threshold)) {
    throw Error(ErrorKind::kInvalidArgument, "cascade thresholds must be finite");
  }
}

TriageVerdict cascade_classify(const CascadeConfig& cfg, double stage1_score,
                               std::span<const double> logits, std::size_t record_id) {
  TriageVerdict v;
  v.record_id = record_id;
  v.stage1_score = stage1_score;
  if (apply_detector(cfg.stage1, stage1_score) == Decision::kNegative) {
    v.label = Verdict::kOod;
    return v;
  }
  const double confidence = max_prob(logits, record_id).max_prob;
  v.stage2_score = confidence;
  v.label = apply_detector(cfg.stage2, confidence) == Decision::kNegative ? Verdict::kAdv
                                                                          : Verdict::kId;
  return v;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "scores and labels differ in length");
  }
  std::uint64_t positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorKind::kInvalidArgument, "labels must be 0 or 1");
    }
    if (std::isnan(scores[i])) throw Error(ErrorKind::kInvalidArgument, "NaN score");
    positives += static_cast<std::uint64_t>(labels[i]);
  }
  const std::uint64_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorKind::kSingleClassInput, "AUROC needs both positive and negative samples");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Walk tie groups in ascending order; every positive beats the negatives seen so far.
  std::uint64_t wins = 0;
  std::uint64_t ties = 0;
  std::uint64_t negatives_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? pos : neg) += 1;
      ++j;
    }
    wins += pos * negatives_below;
    ties += pos * neg;
    negatives_below += neg;
    i = j;
  }
  return (static_cast<double>(wins) + 0.5 * static_cast<double>(ties)) /
         (static_cast<double>(positives) * static_cast<double>(negatives));
}

double auroc(std::span<const double> positives, std::span<const double> negatives) {
  std::vector<double> scores(positives.begin(), positives.end());
  scores.insert(scores.end(), negatives.begin(), negatives.end());
  std::vector<int> labels(scores.size(), 0);
  std::fill_n(labels.begin(), positives.size(), 1);
  return auroc(scores, labels);
}

double percentile_threshold(std::span<const double> scores, double p) {
  if (scores.empty()) throw Error(ErrorKind::kEmptyScores, "percentile of an empty score set");
  if (!(p > 0.0 && p < 100.0)) {
    throw Error(ErrorKind::kInvalidArgument, "percentile must lie strictly between 0 and 100");
  }
  const double n = static_cast<double>(scores.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, scores.size());
  std::vector<double> sorted(scores.begin(), scores.end());
  auto nth = sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(sorted.begin(), nth, sorted.end());
  return *nth;
}

double informed_threshold(std::span<const double> positives, std::span<const double> negatives,
                          InformedCriterion criterion, double target) {
  if (positives.empty() || negatives.empty()) {
    throw Error(ErrorKind::kEmptyScores, "informed thresholds need ID and anomaly scores");
  }
  if (!(target > 0.0 && target <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "target must lie in (0, 1]");
  }
  std::vector<double> pos(positives.begin(), positives.end());
  std::vector<double> neg(negatives.begin(), negatives.end());
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  std::vector<double> candidates(pos);
  candidates.insert(candidates.end(), neg.begin(), neg.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  bool found = false;
  double best_t = 0.0;
  double best_value = -1.0;
  std::size_t fp = 0;
  std::size_t tp = 0;
  for (double t : candidates) {
    while (fp < pos.size() && pos[fp] <= t) ++fp;
    while (tp < neg.size() && neg[tp] <= t) ++tp;
    const double recall = static_cast<double>(tp) / static_cast<double>(neg.size());
    const double precision =
        tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const bool feasible =
        criterion == InformedCriterion::kTargetRecall ? recall >= target : precision >= target;
    const double value = criterion == InformedCriterion::kTargetRecall ? precision : recall;
    if (feasible && value > best_value) {
      found = true;
      best_value = value;
      best_t = t;
    }
  }
  if (!found) {
    throw Error(ErrorKind::kInvalidArgument, "no threshold reaches the requested target");
  }
  return best_t;
}

double merge_ood_thresholds(std::span<const double> thresholds) {
  if (thresholds.empty()) throw Error(ErrorKind::kEmptyInput, "no thresholds to merge");
  return *std::max_element(thresholds.begin(), thresholds.end());
}

const AurocEntry* EvalReport::find(const std::string& detector, const std::string& anomaly) const {
  for (const AurocEntry& e : aurocs) {
    if (e.detector == detector && e.anomaly == anomaly) return &e;
  }
  return nullptr;
}

EvalReport evaluate(const CascadeConfig& cfg, const ScoredSplit& id_test, const ScoredSplit& ood,
                    const ScoredSplit& adv) {
  cfg.validate();
  EvalReport report;
  report.config = cfg;
  report.split_names = {id_test.name, ood.name, adv.name};

  auto stage1_of = [](const ScoredSplit& s) {
    std::vector<double> out;
    out.reserve(s.records.size());
    for (const auto& r : s.records) out.push_back(r.stage1_score);
    return out;
  };
  auto stage2_of = [](const ScoredSplit& s) {
    std::vector<double> out;
    out.reserve(s.records.size());
    for (const auto& r : s.records) out.push_back(max_prob(r.logits, r.record_id).max_prob);
    return out;
  };
  const auto s1_id = stage1_of(id_test);
  const auto s1_ood = stage1_of(ood);
  const auto s1_adv = stage1_of(adv);
  const auto s2_id = stage2_of(id_test);
  const auto s2_adv = stage2_of(adv);

  auto add = [&](const std::string& detector, const std::string& anomaly,
                 const std::vector<double>& pos, const std::vector<double>& neg) {
    if (pos.empty() || neg.empty()) return;
    report.aurocs.push_back({detector, anomaly, auroc(pos, neg), pos.size(), neg.size()});
  };
  std::vector<double> id_and_adv(s1_id);
  id_and_adv.insert(id_and_adv.end(), s1_adv.begin(), s1_adv.end());
  add("stage1", "ood_vs_id_adv", id_and_adv, s1_ood);
  add("stage1", "ood_vs_id", s1_id, s1_ood);
  add("stage1", "adv_vs_id", s1_id, s1_adv);
  add("stage2", "adv_vs_id", s2_id, s2_adv);

  const std::array<const ScoredSplit*, 3> splits = {&id_test, &ood, &adv};
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t truth = 0; truth < 3; ++truth) {
    for (const ScoredRecord& r : splits[truth]->records) {
      TriageVerdict v = cascade_classify(cfg, r.stage1_score, r.logits, r.record_id);
      const auto predicted = static_cast<std::size_t>(v.label);
      ++report.confusion[truth][predicted];
      ++report.counts[truth];
      correct += predicted == truth ? 1 : 0;
      ++total;
      report.verdicts.push_back(std::move(v));
    }
  }
  report.accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  return report;
}

}  // namespace triad
