#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace surplex {

// Shortest decimal string that round-trips back to the same double
// (std::to_chars). Used everywhere a double lands in a file, so reruns
// produce byte-identical output.
std::string format_double(double value);

// Inverse of format_double; throws IoError if the field is not a number.
double parse_double(std::string_view text);

std::vector<std::string> read_lines(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
void ensure_directory(const std::string& path);
bool file_exists(const std::string& path);

}  // namespace surplex
