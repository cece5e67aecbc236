#pragma once

// Little-endian encode/decode helpers shared by the pack and sidecar writers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace triad::detail {

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(value >> (8 * i))));
  }
}

inline void put_u32(std::string& out, std::uint32_t v) { put_le(out, v); }
inline void put_u64(std::string& out, std::uint64_t v) { put_le(out, v); }
inline void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

template <typename U>
U get_le(std::string_view in, std::size_t offset) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(static_cast<std::uint8_t>(in[offset + i])) << (8 * i);
  }
  return value;
}

inline double get_f64(std::string_view in, std::size_t offset) {
  return std::bit_cast<double>(get_le<std::uint64_t>(in, offset));
}

// float32 arrays <-> little-endian bytes.
inline std::string floats_to_le(std::span<const float> values) {
  std::string out(values.size() * 4, '\0');
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), values.data(), out.size());
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto bits = std::bit_cast<std::uint32_t>(values[i]);
      for (int b = 0; b < 4; ++b) out[i * 4 + b] = static_cast<char>(bits >> (8 * b));
    }
  }
  return out;
}

inline std::vector<float> floats_from_le(std::string_view bytes) {
  std::vector<float> out(bytes.size() / 4);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), bytes.data(), out.size() * 4);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, i * 4));
    }
  }
  return out;
}

}  // namespace triad::detail
