#include "triad/pipeline.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "triad/bow.hpp"
#include "triad/confidence.hpp"
#include "triad/error.hpp"

namespace triad::pipeline {

SplitSelection select_split(const EmbeddingPack& pack, SplitTag tag, std::optional<std::size_t> n,
                            std::uint64_t seed) {
  SplitSelection sel;
  sel.split.pack = &pack;
  const std::size_t available = records_with_tag(pack, tag).size();
  if (n && *n > available) {
    sel.short_by = *n - available;
    sel.split.ids = sample_split(pack, tag, std::nullopt, seed);
  } else {
    sel.split.ids = sample_split(pack, tag, n, seed);
  }
  sel.split.name = source_label(pack, sel.split.ids);
  return sel;
}

std::string source_label(const EmbeddingPack& pack, std::span<const std::size_t> ids) {
  std::set<std::string> names;
  for (std::size_t id : ids) names.insert(pack.meta.at(id).source_name);
  std::string out;
  for (const auto& name : names) {
    if (!out.empty()) out += '+';
    out += name;
  }
  return out;
}

std::size_t infer_vocab_size(const EmbeddingPack& pack) {
  if (pack.manifest.vocab_size) return *pack.manifest.vocab_size;
  std::int64_t top = -1;
  for (const SampleMeta& s : pack.meta) {
    if (!s.token_ids) continue;
    for (std::int32_t t : *s.token_ids) top = std::max<std::int64_t>(top, t);
  }
  return static_cast<std::size_t>(top + 1);
}

FitResult fit_models(const EmbeddingPack& train, const FitOptions& options) {
  FitResult result;
  result.sample = sample_per_class(train, SplitTag::kIdTrain, options.per_class, options.seed);
  const auto& ids = result.sample.ids;

  std::vector<int> labels;
  labels.reserve(ids.size());
  for (std::size_t id : ids) labels.push_back(*train.meta[id].gold_label);

  std::set<Aggregation> aggs = options.aggregations;
  if (aggs.empty()) aggs = train.manifest.aggregations;
  std::vector<int> layers = options.layers;
  if (layers.empty()) {
    for (std::size_t l = 1; l <= train.manifest.num_layers; ++l) layers.push_back(static_cast<int>(l));
  }

  const int num_classes = static_cast<int>(train.manifest.num_classes);
  for (Aggregation agg : aggs) {
    for (int layer : layers) {
      Eigen::MatrixXd features =
          gather_features(train, agg, static_cast<std::size_t>(layer), ids);
      result.models.push_back(fit_layer_gaussian(features, labels, num_classes,
                                                 options.regularization, layer, agg));
    }
  }

  const bool have_tokens =
      !ids.empty() && std::all_of(ids.begin(), ids.end(), [&](std::size_t id) {
        return train.meta[id].token_ids.has_value();
      });
  if (options.fit_bow && have_tokens) {
    const std::size_t vocab = infer_vocab_size(train);
    std::vector<std::vector<bow::TokenId>> corpus;
    corpus.reserve(ids.size());
    for (std::size_t id : ids) corpus.push_back(*train.meta[id].token_ids);
    BowModel model;
    model.idf = bow::fit_idf(corpus, vocab);
    std::vector<bow::BowVector> vectors;
    vectors.reserve(corpus.size());
    for (const auto& seq : corpus) vectors.push_back(bow::bow_vector(seq, model.idf));
    model.centroid = bow::fit_centroid(vectors, vocab);
    result.bow = std::move(model);
  }
  return result;
}

const LayerGaussian& find_model(std::span<const LayerGaussian> models, Aggregation agg,
                                int layer) {
  for (const LayerGaussian& g : models) {
    if (g.aggregation() == agg && g.layer() == layer) return g;
  }
  throw Error(ErrorKind::kMissingSidecar, "no fitted model for " + std::string(to_string(agg)) +
                                              " layer " + std::to_string(layer));
}

std::vector<double> layer_scores(const SplitRef& split, const LayerGaussian& model) {
  std::vector<double> out;
  out.reserve(split.size());
  if (split.ids.empty()) return out;
  Eigen::MatrixXd features = gather_features(*split.pack, model.aggregation(),
                                             static_cast<std::size_t>(model.layer()), split.ids);
  for (const LayerScore& s : gaussian_score_batch(model, features, split.ids)) {
    out.push_back(s.score);
  }
  return out;
}

std::vector<double> max_probs(const SplitRef& split) {
  std::vector<double> out;
  out.reserve(split.size());
  for (std::size_t id : split.ids) out.push_back(max_prob(split.pack->logit_row(id), id).max_prob);
  return out;
}

std::vector<double> bow_scores(const SplitRef& split, const BowModel& model) {
  std::vector<double> out;
  out.reserve(split.size());
  for (std::size_t id : split.ids) {
    const auto& tokens = split.pack->meta.at(id).token_ids;
    if (!tokens) {
      throw Error(ErrorKind::kInvalidArgument,
                  "record " + std::to_string(id) + " has no token ids", {.record = id});
    }
    out.push_back(bow::cosine_score(bow::bow_vector(*tokens, model.idf), model.centroid).value);
  }
  return out;
}

CascadeConfig blind_thresholds(const SplitRef& dev, const LayerGaussian& stage1_model,
                               double percentile, bool filter_stage2) {
  CascadeConfig cfg;
  cfg.stage1.source = ScoreSource::gauss_layer(stage1_model.layer(), stage1_model.aggregation());
  const auto s1 = layer_scores(dev, stage1_model);
  cfg.stage1.threshold = percentile_threshold(s1, percentile);

  auto s2 = max_probs(dev);
  if (filter_stage2) {
    std::vector<double> kept;
    for (std::size_t i = 0; i < s2.size(); ++i) {
      if (apply_detector(cfg.stage1, s1[i]) == Decision::kPositive) kept.push_back(s2[i]);
    }
    s2 = std::move(kept);
  }
  cfg.stage2.threshold = percentile_threshold(s2, percentile);
  return cfg;
}

CascadeConfig informed_thresholds(const SplitRef& dev, const SplitRef& ood, const SplitRef& adv,
                                  const LayerGaussian& stage1_model, InformedCriterion criterion,
                                  double target) {
  CascadeConfig cfg;
  cfg.stage1.source = ScoreSource::gauss_layer(stage1_model.layer(), stage1_model.aggregation());
  // Stage 1 treats ID and ADV alike as positives.
  auto in_dist = layer_scores(dev, stage1_model);
  const auto adv_s1 = layer_scores(adv, stage1_model);
  in_dist.insert(in_dist.end(), adv_s1.begin(), adv_s1.end());
  cfg.stage1.threshold =
      informed_threshold(in_dist, layer_scores(ood, stage1_model), criterion, target);
  cfg.stage2.threshold = informed_threshold(max_probs(dev), max_probs(adv), criterion, target);
  return cfg;
}

ScoredSplit score_split(const SplitRef& split, const LayerGaussian& stage1_model) {
  ScoredSplit out;
  out.name = split.name;
  const auto s1 = layer_scores(split, stage1_model);
  out.records.reserve(split.size());
  for (std::size_t i = 0; i < split.ids.size(); ++i) {
    auto row = split.pack->logit_row(split.ids[i]);
    out.records.push_back({split.ids[i], s1[i], std::vector<double>(row.begin(), row.end())});
  }
  return out;
}

EvalReport evaluate_cascade(const CascadeConfig& cfg, const LayerGaussian& stage1_model,
                            const SplitRef& id_test, const SplitRef& ood, const SplitRef& adv) {
  return evaluate(cfg, score_split(id_test, stage1_model), score_split(ood, stage1_model),
                  score_split(adv, stage1_model));
}

std::vector<LayerSweepRow> layer_sweep(std::span<const LayerGaussian> models, Aggregation agg,
                                       const SplitRef& id_test, const SplitRef& ood,
                                       const SplitRef& adv) {
  std::vector<const LayerGaussian*> selected;
  for (const LayerGaussian& g : models) {
    if (g.aggregation() == agg) selected.push_back(&g);
  }
  std::sort(selected.begin(), selected.end(),
            [](const auto* a, const auto* b) { return a->layer() < b->layer(); });

  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  auto safe_auroc = [&](const std::vector<double>& pos, const std::vector<double>& neg) {
    return pos.empty() || neg.empty() ? kNaN : auroc(pos, neg);
  };
  std::vector<LayerSweepRow> rows;
  for (const LayerGaussian* g : selected) {
    const auto s_id = layer_scores(id_test, *g);
    const auto s_ood = layer_scores(ood, *g);
    const auto s_adv = layer_scores(adv, *g);
    std::vector<double> id_adv(s_id);
    id_adv.insert(id_adv.end(), s_adv.begin(), s_adv.end());
    rows.push_back({g->layer(), safe_auroc(id_adv, s_ood), safe_auroc(s_id, s_ood),
                    safe_auroc(s_id, s_adv)});
  }
  return rows;
}

void check_compatible(std::span<const EmbeddingPack* const> packs) {
  const EmbeddingPack* ref = nullptr;
  for (const EmbeddingPack* p : packs) {
    if (!p) continue;
    if (!ref) {
      ref = p;
      continue;
    }
    const auto& a = ref->manifest;
    const auto& b = p->manifest;
    if (a.hidden_dim != b.hidden_dim || a.num_layers != b.num_layers ||
        a.num_classes != b.num_classes || a.model_name != b.model_name) {
      throw Error(ErrorKind::kIncompatiblePacks,
                  "packs disagree on model/shape: '" + a.model_name + "' (L=" +
                      std::to_string(a.num_layers) + ", d=" + std::to_string(a.hidden_dim) +
                      ", C=" + std::to_string(a.num_classes) + ") vs '" + b.model_name +
                      "' (L=" + std::to_string(b.num_layers) + ", d=" +
                      std::to_string(b.hidden_dim) + ", C=" + std::to_string(b.num_classes) + ")");
    }
  }
}

}  // namespace triad::pipeline
