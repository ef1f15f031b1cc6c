#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace relforge::tsv {

std::vector<std::string> split_fields(std::string_view line, char sep = '\t');

// Whole file as lines; strips a trailing '\r' per line so CRLF inputs work.
// Throws DataError if the file cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Atomic-ish write: writes to a sibling temp file then renames over `path`.
void write_file(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// printf-%g style with a fixed number of significant digits; locale-free.
std::string format_sig(double v, int digits);

double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

}  // namespace relforge::tsv
