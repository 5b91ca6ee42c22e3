#include "glr/error.hpp"

namespace glr {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::degenerate_distribution: return "degenerate-distribution";
    case ErrorKind::context_overflow: return "context-overflow";
    case ErrorKind::shape_mismatch: return "shape-mismatch";
    case ErrorKind::truncated_blob: return "truncated-blob";
    case ErrorKind::format: return "format";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::undefined_metric: return "undefined-metric";
    case ErrorKind::unsupported_model: return "unsupported-model";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

} // namespace glr
