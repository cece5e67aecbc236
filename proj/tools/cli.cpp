#include "cli.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "triad/error.hpp"
#include "triad/fileio.hpp"
#include "triad/histogram.hpp"
#include "triad/model_io.hpp"
#include "triad/pack.hpp"
#include "triad/pipeline.hpp"
#include "triad/report.hpp"

namespace triad::cli {

namespace fs = std::filesystem;
using pipeline::SplitRef;

namespace {

struct Role {
  const char* name;
  SplitTag tag;
  std::optional<fs::path> RunConfig::*path;
};

constexpr Role kDev{"id_dev", SplitTag::kIdDev, &RunConfig::pack_id_dev};
constexpr Role kTest{"id_test", SplitTag::kIdTest, &RunConfig::pack_id_test};
constexpr Role kOod{"ood", SplitTag::kOod, &RunConfig::pack_ood};
constexpr Role kAdv{"adv", SplitTag::kAdv, &RunConfig::pack_adv};

// Loads each distinct pack once and checks that all of them describe the same model.
class PackSet {
 public:
  explicit PackSet(const RunConfig& cfg) : cfg_(cfg) {}

  const EmbeddingPack* get(const std::optional<fs::path> RunConfig::*which) {
    const auto& path = cfg_.*which;
    if (!path) return nullptr;
    std::string key = fs::weakly_canonical(*path).string();
    auto it = packs_.find(key);
    if (it == packs_.end()) {
      auto pack = std::make_unique<EmbeddingPack>(read_pack(*path));
      it = packs_.emplace(key, std::move(pack)).first;
      std::vector<const EmbeddingPack*> all;
      for (const auto& [k, p] : packs_) all.push_back(p.get());
      pipeline::check_compatible(all);
    }
    return it->second.get();
  }

  const EmbeddingPack& require(const std::optional<fs::path> RunConfig::*which,
                               const char* flag) {
    const EmbeddingPack* p = get(which);
    if (!p) throw Error(ErrorKind::kInvalidArgument, std::string("missing required flag ") + flag);
    return *p;
  }

 private:
  const RunConfig& cfg_;
  std::map<std::string, std::unique_ptr<EmbeddingPack>> packs_;
};

// Sampled records of a role, warning when the pack holds fewer than requested.
SplitRef sampled(const EmbeddingPack& pack, const Role& role, const RunConfig& cfg,
                 std::ostream& log) {
  auto sel = pipeline::select_split(pack, role.tag, cfg.n, cfg.seed);
  if (sel.short_by > 0) {
    log << "warning: " << role.name << " has " << sel.split.size() << " " << to_string(role.tag)
        << " records, fewer than --n " << cfg.n << "; using all of them\n";
  }
  if (sel.split.name.empty()) sel.split.name = role.name;
  return sel.split;
}

SplitRef all_of(const EmbeddingPack& pack, const Role& role) {
  auto sel = pipeline::select_split(pack, role.tag, std::nullopt, 0);
  if (sel.split.name.empty()) sel.split.name = role.name;
  return sel.split;
}

SplitRef empty_split(const Role& role) {
  SplitRef s;
  s.name = role.name;
  return s;
}

std::vector<LayerGaussian> load_models(const fs::path& dir) {
  std::vector<fs::path> files;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.starts_with("gauss_") && name.ends_with(".bin")) files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw Error(ErrorKind::kMissingSidecar, "no fitted models in " + dir.string());
  }
  std::sort(files.begin(), files.end());
  std::vector<LayerGaussian> models;
  for (const auto& f : files) models.push_back(read_gaussian(f));
  return models;
}

LayerGaussian load_stage1(const RunConfig& cfg) {
  return read_gaussian(cfg.models_dir() / gaussian_file_name(cfg.aggregation(), cfg.layer));
}

std::string thresholds_json(const CascadeConfig& c, const RunConfig& cfg, std::size_t dev_count) {
  nlohmann::ordered_json j;
  j["mode"] = cfg.threshold_mode == ThresholdMode::kBlind ? "blind" : "informed";
  if (cfg.threshold_mode == ThresholdMode::kBlind) {
    j["percentile"] = cfg.percentile;
    j["filter_stage2"] = cfg.filter_stage2;
  } else {
    j["criterion"] = cfg.criterion == InformedCriterion::kTargetRecall ? "recall" : "precision";
    j["target"] = cfg.target;
  }
  j["dev_records"] = dev_count;
  j["stage1"] = {{"source", "gauss"},
                 {"layer", c.stage1.source.layer},
                 {"aggregation", to_string(c.stage1.source.aggregation)},
                 {"threshold", c.stage1.threshold}};
  j["stage2"] = {{"source", "max_prob"}, {"threshold", c.stage2.threshold}};
  return j.dump(2) + "\n";
}

CascadeConfig select_thresholds(const RunConfig& cfg, PackSet& packs, const LayerGaussian& model,
                                std::ostream& log, std::size_t& dev_count) {
  const EmbeddingPack& dev = packs.require(&RunConfig::pack_id_dev, "--pack-id-dev");
  SplitRef dev_split = all_of(dev, kDev);
  dev_count = dev_split.size();
  if (cfg.threshold_mode == ThresholdMode::kBlind) {
    return pipeline::blind_thresholds(dev_split, model, cfg.percentile, cfg.filter_stage2);
  }
  const EmbeddingPack& ood = packs.require(&RunConfig::pack_ood, "--pack-ood");
  const EmbeddingPack& adv = packs.require(&RunConfig::pack_adv, "--pack-adv");
  log << "note: informed thresholds use labelled OOD and ADV scores\n";
  return pipeline::informed_thresholds(dev_split, sampled(ood, kOod, cfg, log),
                                       sampled(adv, kAdv, cfg, log), model, cfg.criterion,
                                       cfg.target);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

void write_histogram(const fs::path& path, const Histogram& h) {
  std::ostringstream ss;
  write_histogram_csv(h, ss);
  write_text(path, ss.str());
}

Histogram maxprob_histogram(const std::vector<SplitRef>& splits, std::size_t num_classes,
                            std::size_t bins) {
  std::vector<HistogramSeries> series;
  for (const SplitRef& s : splits) {
    series.push_back({s.name, s.pack ? pipeline::max_probs(s) : std::vector<double>{}});
  }
  return build_histogram(series, bins, std::pair{1.0 / static_cast<double>(num_classes), 1.0});
}

Histogram gauss_histogram(const std::vector<SplitRef>& splits, const LayerGaussian& model,
                          std::size_t bins) {
  std::vector<HistogramSeries> series;
  for (const SplitRef& s : splits) {
    series.push_back({s.name, s.pack ? pipeline::layer_scores(s, model) : std::vector<double>{}});
  }
  return build_histogram(series, bins);
}

}  // namespace

int cmd_fit(const RunConfig& cfg, std::ostream& log) {
  PackSet packs(cfg);
  const EmbeddingPack& train = packs.require(&RunConfig::pack_id_train, "--pack-id-train");

  pipeline::FitOptions options;
  options.per_class = 8 * cfg.n;
  options.seed = cfg.seed;
  if (cfg.agg) options.aggregations = {*cfg.agg};
  auto fit = pipeline::fit_models(train, options);

  nlohmann::ordered_json summary;
  summary["model_name"] = train.manifest.model_name;
  summary["per_class_requested"] = options.per_class;
  summary["seed"] = cfg.seed;
  summary["per_class_used"] = fit.sample.per_class_count;
  for (std::size_t c = 0; c < fit.sample.shortfall.size(); ++c) {
    if (fit.sample.shortfall[c] > 0) {
      log << "warning: class " << c << " has only " << fit.sample.per_class_count[c]
          << " training records (" << options.per_class << " requested)\n";
    }
  }

  const fs::path dir = cfg.models_dir();
  fs::create_directories(dir);
  auto layers = nlohmann::ordered_json::array();
  for (const LayerGaussian& g : fit.models) {
    write_gaussian(g, dir / gaussian_file_name(g.aggregation(), g.layer()));
    layers.push_back({{"layer", g.layer()},
                      {"aggregation", to_string(g.aggregation())},
                      {"regularization", g.regularization()},
                      {"log_det", g.log_det()},
                      {"fit_count", g.fit_count()}});
  }
  summary["models"] = layers;
  if (fit.bow) {
    write_bow(*fit.bow, dir / kBowFileName);
    summary["bow"] = {{"vocab_size", fit.bow->idf.vocab_size},
                      {"doc_count", fit.bow->idf.doc_count}};
  }
  write_text(dir / "fit.json", summary.dump(2) + "\n");
  log << "fitted " << fit.models.size() << " layer models on " << fit.sample.ids.size()
      << " records" << (fit.bow ? " (+ bag-of-words model)" : "") << " -> " << dir.string()
      << '\n';
  return kExitOk;
}

int cmd_score(const RunConfig& cfg, std::ostream& log) {
  PackSet packs(cfg);
  const auto models = load_models(cfg.models_dir());
  std::optional<BowModel> bow;
  if (fs::exists(cfg.models_dir() / kBowFileName)) bow = read_bow(cfg.models_dir() / kBowFileName);

  std::size_t written = 0;
  for (const Role* role : {&kDev, &kTest, &kOod, &kAdv}) {
    const EmbeddingPack* pack = packs.get(role->path);
    if (!pack) continue;
    SplitRef split = all_of(*pack, *role);
    const bool with_bow =
        bow && std::all_of(split.ids.begin(), split.ids.end(),
                           [&](std::size_t id) { return pack->meta[id].token_ids.has_value(); });

    const auto scores = score_all_layers(*pack, models, split.ids);
    const auto conf = pipeline::max_probs(split);
    const auto cos = with_bow ? pipeline::bow_scores(split, *bow) : std::vector<double>{};

    std::ostringstream csv;
    csv << "record_id,split,source";
    for (const LayerGaussian& g : models) {
      csv << ",gauss_" << to_string(g.aggregation()) << "_L" << g.layer();
    }
    csv << ",max_prob,predicted_class";
    if (with_bow) csv << ",bow_cosine";
    csv << '\n';
    for (std::size_t i = 0; i < split.ids.size(); ++i) {
      const std::size_t id = split.ids[i];
      csv << id << ',' << to_string(pack->meta[id].split) << ',' << pack->meta[id].source_name;
      for (std::size_t m = 0; m < models.size(); ++m) {
        csv << ',' << format_double(scores[i * models.size() + m].score);
      }
      auto row = pack->logit_row(id);
      csv << ',' << format_double(conf[i]) << ','
          << (std::max_element(row.begin(), row.end()) - row.begin());
      if (with_bow) csv << ',' << format_double(cos[i]);
      csv << '\n';
    }
    const fs::path path = cfg.out / ("scores_" + std::string(role->name) + ".csv");
    write_text(path, csv.str());
    log << "scored " << split.size() << " " << role->name << " records -> " << path.string()
        << '\n';
    ++written;
  }
  if (written == 0) {
    throw Error(ErrorKind::kInvalidArgument, "score needs at least one of --pack-id-dev, "
                                             "--pack-id-test, --pack-ood, --pack-adv");
  }
  return kExitOk;
}

int cmd_threshold(const RunConfig& cfg, std::ostream& log) {
  PackSet packs(cfg);
  const LayerGaussian model = load_stage1(cfg);
  std::size_t dev_count = 0;
  const CascadeConfig c = select_thresholds(cfg, packs, model, log, dev_count);
  write_text(cfg.out / "thresholds.json", thresholds_json(c, cfg, dev_count));
  log << "t1 = " << format_double(c.stage1.threshold) << " (" << c.stage1.source.describe()
      << ")\nt2 = " << format_double(c.stage2.threshold) << " (max_prob)\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& log) {
  PackSet packs(cfg);
  const EmbeddingPack& test = packs.require(&RunConfig::pack_id_test, "--pack-id-test");
  const EmbeddingPack& ood = packs.require(&RunConfig::pack_ood, "--pack-ood");
  const EmbeddingPack& adv = packs.require(&RunConfig::pack_adv, "--pack-adv");
  const LayerGaussian model = load_stage1(cfg);

  std::size_t dev_count = 0;
  const CascadeConfig c = select_thresholds(cfg, packs, model, log, dev_count);

  const SplitRef s_test = sampled(test, kTest, cfg, log);
  const SplitRef s_ood = sampled(ood, kOod, cfg, log);
  const SplitRef s_adv = sampled(adv, kAdv, cfg, log);
  if (s_test.ids.empty() || s_ood.ids.empty() || s_adv.ids.empty()) {
    throw Error(ErrorKind::kInsufficientRecords, "every evaluated split needs at least one record",
                {.available = 0});
  }

  const EvalReport report = pipeline::evaluate_cascade(c, model, s_test, s_ood, s_adv);
  std::ostringstream text;
  write_report_text(report, text);
  write_text(cfg.out / "report.txt", text.str());
  write_text(cfg.out / "report.json", report_to_json(report));
  write_text(cfg.out / "thresholds.json", thresholds_json(c, cfg, dev_count));

  std::vector<SplitRef> splits = {s_test, s_ood, s_adv};
  for (std::size_t i = 0; i < 3; ++i) splits[i].name = std::array{kTest, kOod, kAdv}[i].name;
  write_histogram(cfg.out / "hist_maxprob.csv",
                  maxprob_histogram(splits, test.manifest.num_classes, cfg.bins));
  write_histogram(cfg.out / "hist_gauss.csv", gauss_histogram(splits, model, cfg.bins));

  if (cfg.sweep_layers) {
    const auto models = load_models(cfg.models_dir());
    std::ostringstream csv;
    write_layer_sweep_csv(pipeline::layer_sweep(models, cfg.aggregation(), s_test, s_ood, s_adv),
                          csv);
    write_text(cfg.out / "layer_sweep.csv", csv.str());
  }

  log << "t1 = " << format_double(c.stage1.threshold)
      << ", t2 = " << format_double(c.stage2.threshold) << '\n';
  for (const AurocEntry& e : report.aurocs) {
    log << e.detector << ' ' << e.anomaly << " AUROC = " << format_double(e.auroc) << '\n';
  }
  log << "three-way accuracy = " << format_double(report.accuracy) << '\n';
  return kExitOk;
}

int cmd_hist(const RunConfig& cfg, std::ostream& log) {
  PackSet packs(cfg);
  std::vector<SplitRef> splits;
  std::size_t num_classes = 0;
  for (const Role* role : {&kTest, &kOod, &kAdv}) {
    const EmbeddingPack* pack = packs.get(role->path);
    if (!pack) {
      splits.push_back(empty_split(*role));
      continue;
    }
    num_classes = pack->manifest.num_classes;
    SplitRef s = sampled(*pack, *role, cfg, log);
    s.name = role->name;
    splits.push_back(std::move(s));
  }
  if (num_classes == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "hist needs at least one of --pack-id-test, --pack-ood, --pack-adv");
  }

  Histogram h;
  if (cfg.hist_source == "maxprob") {
    h = maxprob_histogram(splits, num_classes, cfg.bins);
  } else if (cfg.hist_source == "gauss") {
    h = gauss_histogram(splits, load_stage1(cfg), cfg.bins);
  } else if (cfg.hist_source == "bow") {
    const BowModel bow = read_bow(cfg.models_dir() / kBowFileName);
    std::vector<HistogramSeries> series;
    for (const SplitRef& s : splits) {
      series.push_back({s.name, s.pack ? pipeline::bow_scores(s, bow) : std::vector<double>{}});
    }
    h = build_histogram(series, cfg.bins, std::pair{0.0, 1.0});
  } else {
    throw Error(ErrorKind::kInvalidArgument, "unknown histogram source " + cfg.hist_source);
  }
  const fs::path path = cfg.out / ("hist_" + cfg.hist_source + ".csv");
  write_histogram(path, h);
  log << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_validate_pack(const RunConfig& cfg, std::ostream& log) {
  int code = kExitOk;
  for (const fs::path& p : cfg.validate_paths) {
    try {
      EmbeddingPack pack = read_pack(p);
      const auto& m = pack.manifest;
      log << "ok " << p.string() << ": model=" << m.model_name << " N=" << m.num_records
          << " L=" << m.num_layers << " d=" << m.hidden_dim << " C=" << m.num_classes;
      for (SplitTag tag : {SplitTag::kIdTrain, SplitTag::kIdDev, SplitTag::kIdTest,
                           SplitTag::kOod, SplitTag::kAdv}) {
        const std::size_t count = records_with_tag(pack, tag).size();
        if (count) log << ' ' << to_string(tag) << '=' << count;
      }
      log << '\n';
    } catch (const Error& e) {
      log << "FAIL " << p.string() << ": " << e.what() << '\n';
      code = std::max(code, exit_code_for(e.kind()));
    }
  }
  return code;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Triage classifier inputs as in-distribution, out-of-distribution or adversarial", "triad"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string agg_text;
  std::string mode_text = "blind";
  std::string criterion_text = "recall";

  auto add_packs = [&](CLI::App* sub) {
    sub->add_option("--pack-id-train", cfg.pack_id_train, "Pack holding ID_TRAIN records");
    sub->add_option("--pack-id-dev", cfg.pack_id_dev, "Pack holding ID_DEV records");
    sub->add_option("--pack-id-test", cfg.pack_id_test, "Pack holding ID_TEST records");
    sub->add_option("--pack-ood", cfg.pack_ood, "Pack holding OOD records");
    sub->add_option("--pack-adv", cfg.pack_adv, "Pack holding ADV records");
  };
  auto add_common = [&](CLI::App* sub) {
    add_packs(sub);
    sub->add_option("--layer", cfg.layer, "Stage-1 layer (1-based)")->check(CLI::PositiveNumber);
    sub->add_option("--agg", agg_text, "Aggregation")->check(CLI::IsMember({"cls", "avg"}));
    sub->add_option("--percentile", cfg.percentile, "Blind-threshold percentile")
        ->check(CLI::Range(0.0, 100.0));
    sub->add_option("--n", cfg.n, "Records sampled per split")->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "Sampling seed");
    sub->add_option("--out", cfg.out, "Output directory");
    sub->add_option("--models", cfg.models, "Model directory (default <out>/models)");
  };
  auto add_threshold_flags = [&](CLI::App* sub) {
    sub->add_option("--threshold-mode", mode_text, "blind or informed")
        ->check(CLI::IsMember({"blind", "informed"}));
    sub->add_option("--informed-criterion", criterion_text, "recall or precision")
        ->check(CLI::IsMember({"recall", "precision"}));
    sub->add_option("--target", cfg.target, "Target recall/precision for informed mode");
    sub->add_flag("--filter-stage2", cfg.filter_stage2,
                  "Choose t2 only from dev records that pass stage 1");
  };

  auto* fit = app.add_subcommand("fit", "Fit per-layer Gaussian models (and BOW statistics)");
  add_common(fit);
  auto* score = app.add_subcommand("score", "Write per-record scores as CSV");
  add_common(score);
  auto* threshold = app.add_subcommand("threshold", "Select cascade thresholds");
  add_common(threshold);
  add_threshold_flags(threshold);
  auto* eval = app.add_subcommand("eval", "Evaluate the two-stage cascade");
  add_common(eval);
  add_threshold_flags(eval);
  eval->add_flag("--sweep-layers", cfg.sweep_layers, "Also write per-layer AUROCs");
  eval->add_option("--bins", cfg.bins, "Histogram bins")->check(CLI::PositiveNumber);
  auto* hist = app.add_subcommand("hist", "Histogram of a score across splits");
  add_common(hist);
  hist->add_option("--source", cfg.hist_source, "bow, gauss or maxprob")
      ->check(CLI::IsMember({"bow", "gauss", "maxprob"}));
  hist->add_option("--bins", cfg.bins, "Number of bins")->check(CLI::PositiveNumber);
  auto* validate = app.add_subcommand("validate-pack", "Validate pack directories");
  validate->add_option("paths", cfg.validate_paths, "Pack directories")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (!agg_text.empty()) cfg.agg = parse_aggregation(agg_text);
  cfg.threshold_mode = mode_text == "informed" ? ThresholdMode::kInformed : ThresholdMode::kBlind;
  cfg.criterion =
      criterion_text == "precision" ? InformedCriterion::kTargetPrecision : InformedCriterion::kTargetRecall;

  try {
    if (*fit) return cmd_fit(cfg, err);
    if (*score) return cmd_score(cfg, err);
    if (*threshold) return cmd_threshold(cfg, err);
    if (*eval) return cmd_eval(cfg, err);
    if (*hist) return cmd_hist(cfg, err);
    if (*validate) return cmd_validate_pack(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace triad::cli
