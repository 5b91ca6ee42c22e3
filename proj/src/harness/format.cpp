#include "glr/harness/format.hpp"

#include "glr/error.hpp"

#include <charconv>
#include <cmath>

namespace glr {

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, result.ptr);
}

double parse_double(const std::string& text, const std::string& what) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    const auto result = std::from_chars(text.data(), end, value);
    if (result.ec != std::errc{} || result.ptr != end) {
        throw Error(ErrorKind::configuration, "'" + what + "': not a number: '" + text + "'");
    }
    return value;
}

} // namespace glr
