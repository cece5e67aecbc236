#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace triad {

// How a sentence's per-token hidden states were pooled into one vector.
enum class Aggregation { kCls, kAvg };

inline constexpr std::array<Aggregation, 2> kAllAggregations = {Aggregation::kCls,
                                                                 Aggregation::kAvg};

std::string_view to_string(Aggregation agg) noexcept;
std::optional<Aggregation> parse_aggregation(std::string_view text) noexcept;

enum class SplitTag { kIdTrain, kIdDev, kIdTest, kOod, kAdv };

std::string_view to_string(SplitTag tag) noexcept;
std::optional<SplitTag> parse_split_tag(std::string_view text) noexcept;

// Three-way triage outcome. Also used as the row/column order of confusion matrices.
enum class Verdict { kId = 0, kOod = 1, kAdv = 2 };

std::string_view to_string(Verdict v) noexcept;

}  // namespace triad
