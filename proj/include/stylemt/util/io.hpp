#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stylemt {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reads a whole text file as lines. Strips a trailing '\n' (and a '\r' before
// it); a missing final newline is accepted.
std::vector<std::string> read_lines(const std::string& path);

// Writes lines joined by '\n' with a terminating newline. Parent directories
// must already exist.
void write_lines(const std::string& path, const std::vector<std::string>& lines);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::vector<std::string> split_ws(const std::string& line);
std::vector<std::string> split_on(const std::string& line, char sep);
std::string join(const std::vector<std::string>& tokens, const std::string& sep);

// Fixed-format floating point helpers (snprintf-backed, locale-independent).
std::string fmt_double(double v, int precision);   // %.{p}f
std::string fmt_general(double v, int precision);  // %.{p}g

}  // namespace stylemt
