#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "triad/detect.hpp"
#include "triad/types.hpp"

namespace triad::cli {

enum class ThresholdMode { kBlind, kInformed };

struct RunConfig {
  std::optional<std::filesystem::path> pack_id_train;
  std::optional<std::filesystem::path> pack_id_dev;
  std::optional<std::filesystem::path> pack_id_test;
  std::optional<std::filesystem::path> pack_ood;
  std::optional<std::filesystem::path> pack_adv;
  int layer = 2;
  std::optional<Aggregation> agg;  // fit: restrict; elsewhere defaults to cls
  double percentile = 5.0;
  std::size_t n = 500;
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> models;  // defaults to <out>/models
  bool sweep_layers = false;
  ThresholdMode threshold_mode = ThresholdMode::kBlind;
  InformedCriterion criterion = InformedCriterion::kTargetRecall;
  double target = 0.95;
  bool filter_stage2 = false;
  std::size_t bins = 50;
  std::string hist_source = "maxprob";
  std::vector<std::filesystem::path> validate_paths;

  Aggregation aggregation() const { return agg.value_or(Aggregation::kCls); }
  std::filesystem::path models_dir() const { return models.value_or(out / "models"); }
};

int cmd_fit(const RunConfig& cfg, std::ostream& log);
int cmd_score(const RunConfig& cfg, std::ostream& log);
int cmd_threshold(const RunConfig& cfg, std::ostream& log);
int cmd_eval(const RunConfig& cfg, std::ostream& log);
int cmd_hist(const RunConfig& cfg, std::ostream& log);
int cmd_validate_pack(const RunConfig& cfg, std::ostream& log);

// Parses argv-style arguments (without the program name) and runs the chosen
// subcommand. Returns the process exit code: 0 ok, 1 validation, 2 numerical.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace triad::cli
