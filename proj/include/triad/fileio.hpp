#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace triad {

// Writes to a sibling temporary file and renames it over `path`. Throws IoFailure.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace triad
