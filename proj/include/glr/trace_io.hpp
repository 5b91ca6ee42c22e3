#pragma once

#include "glr/decode.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace glr {

inline constexpr const char* kTraceSchema = "trace_v1";

/// One JSON object (no trailing newline) for one decoding step.
/// Key order: schema, [task], step, entropy_raw, entropy_norm, mode, gate,
/// token, top_candidates, dominant_prob, runner_up_prob.
std::string trace_line(const StepTrace& step, std::optional<std::size_t> task = std::nullopt);

/// Writes every step of the transcript, one line each.
void write_trace_jsonl(std::ostream& out, const Transcript& transcript,
                       std::optional<std::size_t> task = std::nullopt);

/// Fields of a trace line as read back from disk.
struct TraceRecord {
    std::size_t step = 0;
    double entropy_raw = 0.0;
    double entropy_norm = 0.0;
    std::string mode;
    std::string gate;
    TokenId token = 0;
    std::vector<std::pair<TokenId, double>> top_candidates;
    double dominant_prob = 0.0;
    double runner_up_prob = 0.0;
};

TraceRecord parse_trace_line(const std::string& line);

} // namespace glr
