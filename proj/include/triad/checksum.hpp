#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace triad {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// FNV-1a, 64-bit. Pass a previous result as `state` to hash incrementally.
constexpr std::uint64_t fnv1a64(std::span<const std::byte> bytes,
                                std::uint64_t state = kFnvOffsetBasis) noexcept {
  for (std::byte b : bytes) {
    state ^= static_cast<std::uint64_t>(b);
    state *= kFnvPrime;
  }
  return state;
}

std::uint64_t fnv1a64(std::string_view text) noexcept;

// 16 lowercase hex digits, no prefix.
std::string to_hex64(std::uint64_t value);
bool parse_hex64(std::string_view text, std::uint64_t& out) noexcept;

}  // namespace triad
