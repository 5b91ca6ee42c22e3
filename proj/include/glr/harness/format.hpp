#pragma once

#include <string>

namespace glr {

/// Shortest decimal text that reads back as exactly the same double.
std::string format_double(double value);

/// Parses a whole string as a double; throws configuration error mentioning `what`.
double parse_double(const std::string& text, const std::string& what);

} // namespace glr
