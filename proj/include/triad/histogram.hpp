#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace triad {

struct HistogramSeries {
  std::string name;
  std::vector<double> values;
};

// Shared bin edges with one count column per series.
struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> counts;  // [series][bin]
};

// Values outside an explicit range are clamped into the edge bins. Without a
// range the pooled min/max is used. Empty series give zero columns.
Histogram build_histogram(const std::vector<HistogramSeries>& series, std::size_t bins,
                          std::optional<std::pair<double, double>> range = std::nullopt);

// Columns: bin_left,bin_right,<name>...
void write_histogram_csv(const Histogram& h, std::ostream& out);

}  // namespace triad
