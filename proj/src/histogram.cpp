#include "triad/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "triad/error.hpp"
#include "triad/fileio.hpp"

namespace triad {

Histogram build_histogram(const std::vector<HistogramSeries>& series, std::size_t bins,
                          std::optional<std::pair<double, double>> range) {
  if (bins == 0) throw Error(ErrorKind::kInvalidArgument, "histogram needs at least one bin");
  double lo = 0.0;
  double hi = 1.0;
  if (range) {
    std::tie(lo, hi) = *range;
    if (!(lo < hi)) throw Error(ErrorKind::kInvalidArgument, "histogram range must be increasing");
  } else {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
      for (double v : s.values) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
    }
    if (std::isfinite(mn)) {
      lo = mn;
      hi = mx;
      if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
      }
    }
  }

  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  h.edges.back() = hi;
  const double width = hi - lo;
  for (const auto& s : series) {
    h.names.push_back(s.name);
    std::vector<std::size_t> counts(bins, 0);
    for (double v : s.values) {
      double pos = std::floor((v - lo) / width * static_cast<double>(bins));
      pos = std::clamp(pos, 0.0, static_cast<double>(bins - 1));
      ++counts[static_cast<std::size_t>(pos)];
    }
    h.counts.push_back(std::move(counts));
  }
  return h;
}

void write_histogram_csv(const Histogram& h, std::ostream& out) {
  out << "bin_left,bin_right";
  for (const auto& name : h.names) out << ',' << name;
  out << '\n';
  for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
    out << format_double(h.edges[b]) << ',' << format_double(h.edges[b + 1]);
    for (const auto& column : h.counts) out << ',' << column[b];
    out << '\n';
  }
}

}  // namespace triad
