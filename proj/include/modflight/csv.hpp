#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace modflight::csv {

/// Shortest decimal text that parses back to exactly `value` (std::to_chars).
std::string format(double value);

/// Writes `values` comma-separated with `format`, followed by '\n'.
void write_row(std::ostream& out, const std::vector<double>& values);

/// Parses one comma-separated line of numbers. Throws ParseError.
std::vector<double> parse_row(const std::string& line);

std::vector<std::string> split(const std::string& line, char sep = ',');

}  // namespace modflight::csv
