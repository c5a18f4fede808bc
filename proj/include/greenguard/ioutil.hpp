#pragma once

#include <string>

namespace greenguard {

// Formats a double with enough digits that parsing it back restores the
// exact bit pattern.
std::string fmt_double(double v);

// Writes content to path via a temp file in the same directory plus an
// atomic rename, so a failed run never leaves a partial output behind.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Current wall-clock time as an ISO-8601 UTC string with milliseconds.
std::string iso8601_now();

std::string to_lower(std::string s);

// Trims whitespace and maps "Header Length" / "header-length" style names
// onto the canonical lower_snake_case spelling.
std::string normalize_column_name(std::string s);

}  // namespace greenguard
