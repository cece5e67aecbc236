#include "triad/types.hpp"

namespace triad {

std::string_view to_string(Aggregation agg) noexcept {
  return agg == Aggregation::kCls ? "cls" : "avg";
}

std::optional<Aggregation> parse_aggregation(std::string_view text) noexcept {
  if (text == "cls" || text == "CLS") return Aggregation::kCls;
  if (text == "avg" || text == "AVG") return Aggregation::kAvg;
  return std::nullopt;
}

std::string_view to_string(SplitTag tag) noexcept {
  switch (tag) {
    case SplitTag::kIdTrain: return "ID_TRAIN";
    case SplitTag::kIdDev: return "ID_DEV";
    case SplitTag::kIdTest: return "ID_TEST";
    case SplitTag::kOod: return "OOD";
    case SplitTag::kAdv: return "ADV";
  }
  return "?";
}

std::optional<SplitTag> parse_split_tag(std::string_view text) noexcept {
  for (SplitTag t : {SplitTag::kIdTrain, SplitTag::kIdDev, SplitTag::kIdTest, SplitTag::kOod,
                     SplitTag::kAdv}) {
    if (text == to_string(t)) return t;
  }
  return std::nullopt;
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::kId: return "ID";
    case Verdict::kOod: return "OOD";
    case Verdict::kAdv: return "ADV";
  }
  return "?";
}

}  // namespace triad
