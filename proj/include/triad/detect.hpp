#pragma once

// Threshold detectors, AUROC, threshold selection, and the two-stage
// ID / OOD / Adv cascade.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triad/types.hpp"

namespace triad {

struct ScoreSource {
  enum class Kind { kGaussLayer, kMaxProb, kBowCosine };

  Kind kind = Kind::kMaxProb;
  int layer = 0;  // kGaussLayer only
  Aggregation aggregation = Aggregation::kCls;

  static ScoreSource gauss_layer(int layer, Aggregation agg) {
    return {Kind::kGaussLayer, layer, agg};
  }
  static ScoreSource max_prob() { return {Kind::kMaxProb, 0, Aggregation::kCls}; }
  static ScoreSource bow_cosine() { return {Kind::kBowCosine, 0, Aggregation::kCls}; }

  std::string describe() const;
  bool operator==(const ScoreSource&) const = default;
};

// Positive (looks in-distribution) iff score > threshold.
struct ThresholdDetector {
  ScoreSource source;
  double threshold = 0.0;
};

enum class Decision { kNegative, kPositive };

Decision apply_detector(const ThresholdDetector& det, double score);

struct CascadeConfig {
  ThresholdDetector stage1{ScoreSource::gauss_layer(2, Aggregation::kCls), 0.0};
  ThresholdDetector stage2{ScoreSource::max_prob(), 0.0};

  // Throws InvalidArgument unless stage1 is a Gaussian layer and stage2 is max-prob,
  // with finite thresholds.
  void validate() const;
};

struct TriageVerdict {
  std::size_t record_id = 0;
  Verdict label = Verdict::kId;
  double stage1_score = 0.0;
  std::optional<double> stage2_score;  // absent when stage 1 already flagged OOD
};

TriageVerdict cascade_classify(const CascadeConfig& cfg, double stage1_score,
                               std::span<const double> logits, std::size_t record_id = 0);

// Mann-Whitney AUROC: P(score of a random positive > score of a random negative),
// ties counted as 1/2. labels: 1 positive, 0 negative. Throws SingleClassInput.
double auroc(std::span<const double> scores, std::span<const int> labels);

// AUROC of positives against negatives given as two score lists.
double auroc(std::span<const double> positives, std::span<const double> negatives);

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest score (at least the first).
// Throws EmptyScores, InvalidArgument unless 0 < p < 100.
double percentile_threshold(std::span<const double> scores, double p);

// Threshold chosen with labelled anomalies available. `positives` are
// in-distribution scores, `negatives` anomaly scores; a sample is flagged when
// score <= t. kTargetRecall: flag at least `target` of the anomalies and, among
// such thresholds, maximise precision of the flagged set. kTargetPrecision: keep
// precision >= target and maximise anomaly recall. Ties go to the lower threshold.
enum class InformedCriterion { kTargetRecall, kTargetPrecision };

double informed_threshold(std::span<const double> positives, std::span<const double> negatives,
                          InformedCriterion criterion, double target);

// One detector at least as conservative as every input detector: the max.
double merge_ood_thresholds(std::span<const double> thresholds);

struct ScoredRecord {
  std::size_t record_id = 0;
  double stage1_score = 0.0;
  std::vector<double> logits;
};

struct ScoredSplit {
  std::string name;  // e.g. dataset or attack name
  std::vector<ScoredRecord> records;
};

struct AurocEntry {
  std::string detector;
  std::string anomaly;
  double auroc = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct EvalReport {
  CascadeConfig config;
  std::vector<AurocEntry> aurocs;
  // confusion[true][predicted], both indexed by Verdict.
  std::array<std::array<std::size_t, 3>, 3> confusion{};
  std::array<std::size_t, 3> counts{};
  double accuracy = 0.0;
  std::array<std::string, 3> split_names;
  std::vector<TriageVerdict> verdicts;  // ID, then OOD, then ADV records

  const AurocEntry* find(const std::string& detector, const std::string& anomaly) const;
};

// Stage 1 AUROC uses OOD as negatives and ID + ADV as positives; stage 2 uses
// ADV as negatives and ID as positives, on ID and ADV records only (stage 1
// assumed ideal). The cascade confusion matrix covers every record. Entries
// whose two classes are not both present are omitted.
EvalReport evaluate(const CascadeConfig& cfg, const ScoredSplit& id_test, const ScoredSplit& ood,
                    const ScoredSplit& adv);

}  // namespace triad
