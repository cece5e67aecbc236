#pragma once

// Glue between packs, fitted models and detectors: what the command-line
// front end runs, exposed as a library so it can be tested in-process.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "triad/detect.hpp"
#include "triad/gauss.hpp"
#include "triad/model_io.hpp"
#include "triad/pack.hpp"
#include "triad/report.hpp"

namespace triad::pipeline {

// A subset of one pack's records.
struct SplitRef {
  const EmbeddingPack* pack = nullptr;
  std::vector<std::size_t> ids;
  std::string name;

  std::size_t size() const { return ids.size(); }
};

// Records of `tag` in `pack`, sampled down to n when n is set and enough exist.
// When fewer than n exist, all are used and `short_by` reports the gap.
struct SplitSelection {
  SplitRef split;
  std::size_t short_by = 0;
};
SplitSelection select_split(const EmbeddingPack& pack, SplitTag tag, std::optional<std::size_t> n,
                            std::uint64_t seed);

// Comma-joined distinct source names of the selected records.
std::string source_label(const EmbeddingPack& pack, std::span<const std::size_t> ids);

struct FitOptions {
  std::size_t per_class = 4000;
  std::uint64_t seed = 0;
  std::set<Aggregation> aggregations;  // empty: every aggregation in the pack
  std::vector<int> layers;             // empty: every layer
  RegularizationPolicy regularization;
  bool fit_bow = true;  // only when every sampled record carries token ids
};

struct FitResult {
  std::vector<LayerGaussian> models;
  std::optional<BowModel> bow;
  ClassSample sample;
};

FitResult fit_models(const EmbeddingPack& train, const FitOptions& options);

// Throws MissingSidecar when no model matches.
const LayerGaussian& find_model(std::span<const LayerGaussian> models, Aggregation agg, int layer);

std::vector<double> layer_scores(const SplitRef& split, const LayerGaussian& model);
std::vector<double> max_probs(const SplitRef& split);
// Throws InvalidArgument when a record lacks token ids.
std::vector<double> bow_scores(const SplitRef& split, const BowModel& model);

// Vocabulary size for BOW features: the manifest value, else max token id + 1.
std::size_t infer_vocab_size(const EmbeddingPack& pack);

// Blind thresholds: the p-th percentile of ID dev scores for both stages. With
// `filter_stage2` the stage 2 percentile uses only dev records that pass stage 1.
CascadeConfig blind_thresholds(const SplitRef& dev, const LayerGaussian& stage1_model,
                               double percentile, bool filter_stage2 = false);

// Thresholds chosen with the OOD and ADV scores in view.
CascadeConfig informed_thresholds(const SplitRef& dev, const SplitRef& ood, const SplitRef& adv,
                                  const LayerGaussian& stage1_model, InformedCriterion criterion,
                                  double target);

ScoredSplit score_split(const SplitRef& split, const LayerGaussian& stage1_model);

EvalReport evaluate_cascade(const CascadeConfig& cfg, const LayerGaussian& stage1_model,
                            const SplitRef& id_test, const SplitRef& ood, const SplitRef& adv);

// One row per model (layer) of the given aggregation, in layer order.
std::vector<LayerSweepRow> layer_sweep(std::span<const LayerGaussian> models, Aggregation agg,
                                       const SplitRef& id_test, const SplitRef& ood,
                                       const SplitRef& adv);

// Throws IncompatiblePacks unless d, L, C and model name agree.
void check_compatible(std::span<const EmbeddingPack* const> packs);

}  // namespace triad::pipeline
