#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace glr {

enum class ErrorKind {
    invalid_parameter,
    invalid_input,
    degenerate_distribution,
    context_overflow,
    shape_mismatch,
    truncated_blob,
    format,
    empty_input,
    undefined_metric,
    unsupported_model,
    configuration,
    io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace glr
