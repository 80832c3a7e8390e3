#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace cns::csv {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

double parse_double(std::string_view text);
unsigned long long parse_unsigned(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char sep = ',');

/// Reads the next non-empty line, stripping a trailing '\r'. False at EOF.
bool next_line(std::istream& in, std::string& line);

/// Opens `path` for binary writing; throws IoError naming the path on failure.
std::ofstream open_output(const std::filesystem::path& path);
std::ifstream open_input(const std::filesystem::path& path);

} // namespace cns::csv
