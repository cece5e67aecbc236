#include "triad/report.hpp"

#include <nlohmann/json.hpp>

#include "triad/fileio.hpp"

namespace triad {

namespace {

constexpr std::array<Verdict, 3> kOrder = {Verdict::kId, Verdict::kOod, Verdict::kAdv};

}  // namespace

void write_report_text(const EvalReport& report, std::ostream& out) {
  out << "# triad evaluation report\n";
  out << "format_version\t1\n\n";

  out << "[config]\n";
  out << "stage1_source\t" << report.config.stage1.source.describe() << '\n';
  out << "stage1_threshold\t" << format_double(report.config.stage1.threshold) << '\n';
  out << "stage2_source\t" << report.config.stage2.source.describe() << '\n';
  out << "stage2_threshold\t" << format_double(report.config.stage2.threshold) << "\n\n";

  out << "[splits]\n";
  out << "role\tname\tcount\n";
  for (std::size_t i = 0; i < 3; ++i) {
    out << to_string(kOrder[i]) << '\t' << report.split_names[i] << '\t' << report.counts[i]
        << '\n';
  }
  out << '\n';

  out << "[auroc]\n";
  out << "detector\tanomaly\tauroc\tpositives\tnegatives\n";
  for (const AurocEntry& e : report.aurocs) {
    out << e.detector << '\t' << e.anomaly << '\t' << format_double(e.auroc) << '\t'
        << e.positives << '\t' << e.negatives << '\n';
  }
  out << '\n';

  out << "[confusion]\n";
  out << "true\\predicted\tID\tOOD\tADV\n";
  for (std::size_t t = 0; t < 3; ++t) {
    out << to_string(kOrder[t]);
    for (std::size_t p = 0; p < 3; ++p) out << '\t' << report.confusion[t][p];
    out << '\n';
  }
  out << '\n';

  out << "[accuracy]\n";
  out << "three_way\t" << format_double(report.accuracy) << '\n';
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["config"] = {
      {"stage1_source", report.config.stage1.source.describe()},
      {"stage1_threshold", report.config.stage1.threshold},
      {"stage2_source", report.config.stage2.source.describe()},
      {"stage2_threshold", report.config.stage2.threshold},
  };
  auto splits = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < 3; ++i) {
    splits.push_back({{"role", to_string(kOrder[i])},
                      {"name", report.split_names[i]},
                      {"count", report.counts[i]}});
  }
  j["splits"] = splits;
  auto aurocs = nlohmann::ordered_json::array();
  for (const AurocEntry& e : report.aurocs) {
    aurocs.push_back({{"detector", e.detector},
                      {"anomaly", e.anomaly},
                      {"auroc", e.auroc},
                      {"positives", e.positives},
                      {"negatives", e.negatives}});
  }
  j["auroc"] = aurocs;
  j["confusion"] = report.confusion;
  j["accuracy"] = report.accuracy;
  return j.dump(2) + "\n";
}

void write_layer_sweep_csv(const std::vector<LayerSweepRow>& rows, std::ostream& out) {
  out << "layer,stage1_auroc,ood_vs_id_auroc,adv_vs_id_auroc\n";
  for (const auto& r : rows) {
    out << r.layer << ',' << format_double(r.stage1_auroc) << ',' << format_double(r.ood_vs_id)
        << ',' << format_double(r.adv_vs_id) << '\n';
  }
}

}  // namespace triad
