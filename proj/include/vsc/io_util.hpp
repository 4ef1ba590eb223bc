#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vsc {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Fixed significant digits for report output (printf %.*g).
std::string format_sig(double value, int digits = 6);

/// Strict double parse of an entire token; throws std::invalid_argument
/// including `where` on failure.
double parse_double(std::string_view token, const std::string& where);

int parse_int(std::string_view token, const std::string& where);

std::vector<std::string_view> split_csv_line(std::string_view line);

/// Read a whole text file, throwing std::runtime_error when unreadable.
std::string read_text_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Lines without trailing newline artifacts; skips a UTF-8 BOM, drops a final
/// empty line, keeps interior empty lines.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// View into `s` with ASCII whitespace stripped from both ends.
std::string_view trim(std::string_view s);

}  // namespace vsc
