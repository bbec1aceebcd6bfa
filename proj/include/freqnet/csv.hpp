#pragma once

#include <string>
#include <vector>

namespace freqnet {

// RFC 4180 quoting: fields containing comma, quote, CR or LF are wrapped in
// double quotes with embedded quotes doubled.
std::string csv_quote(const std::string& field);

// Splits one CSV record, honoring quoted fields.
std::vector<std::string> csv_split(const std::string& line);

// Shortest round-trip formatting for doubles (17 significant digits).
std::string format_double(double v);

}  // namespace freqnet
