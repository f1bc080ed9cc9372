#pragma once

#include <string>
#include <vector>

namespace knowrank::util {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Reads a file into lines, accepting both \n and \r\n endings.
std::vector<std::string> read_lines(const std::string& path);

/// Splits in-memory text into lines with the same line-ending handling.
std::vector<std::string> split_lines(const std::string& text);

bool file_exists(const std::string& path);
void ensure_dir(const std::string& path);

/// Shortest decimal form that round-trips the exact double value.
std::string format_double(double v);

}  // namespace knowrank::util
