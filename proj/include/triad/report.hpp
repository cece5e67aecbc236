#pragma once

// Text/JSON serialisation of evaluation results. Schema: docs/report-format.md.

#include <ostream>
#include <string>
#include <vector>

#include "triad/detect.hpp"

namespace triad {

// Per-layer detection quality of the Gaussian score, one row per layer.
struct LayerSweepRow {
  int layer = 0;
  double stage1_auroc = 0.0;  // OOD vs ID + ADV
  double ood_vs_id = 0.0;
  double adv_vs_id = 0.0;
};

void write_report_text(const EvalReport& report, std::ostream& out);
std::string report_to_json(const EvalReport& report);

void write_layer_sweep_csv(const std::vector<LayerSweepRow>& rows, std::ostream& out);

}  // namespace triad
