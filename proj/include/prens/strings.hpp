#pragma once

#include <string>
#include <vector>

namespace prens {

// shortest representation that parses back to the same double
std::string format_double(double v);

// fixed significant digits (printf %.{digits}g)
std::string format_double(double v, int digits);

// quote a CSV field if it contains a delimiter, quote or newline
std::string csv_field(const std::string& s);

std::string join(const std::vector<std::string>& parts, const std::string& sep);

std::string trim(const std::string& s);

} // namespace prens
