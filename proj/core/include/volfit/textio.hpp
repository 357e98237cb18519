#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace volfit {

/// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double value);

/// Locale-independent parse of a full token; throws ParseError otherwise.
double parse_double(std::string_view token);
long parse_long(std::string_view token);

/// Splits one CSV line on commas. Fields in our schemas never contain
/// commas or quotes, so no quoting rules are applied.
std::vector<std::string_view> split_csv_line(std::string_view line);

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames over the target, so readers
/// never observe a partially written file.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace volfit
