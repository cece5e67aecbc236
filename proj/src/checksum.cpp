#include "triad/checksum.hpp"

#include <charconv>

namespace triad {

std::uint64_t fnv1a64(std::string_view text) noexcept {
  return fnv1a64(std::as_bytes(std::span(text.data(), text.size())));
}

std::string to_hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

bool parse_hex64(std::string_view text, std::uint64_t& out) noexcept {
  if (text.size() != 16) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out, 16);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace triad
