#include "glr/trace_io.hpp"

#include "glr/error.hpp"

#include <json.hpp>

#include <ostream>

namespace glr {

std::string trace_line(const StepTrace& step, std::optional<std::size_t> task) {
    nlohmann::ordered_json j;
    j["schema"] = kTraceSchema;
    if (task) {
        j["task"] = *task;
    }
    j["step"] = step.step;
    j["entropy_raw"] = step.gate.reading.raw;
    j["entropy_norm"] = step.gate.reading.normalized;
    j["mode"] = to_string(step.mode);
    j["gate"] = to_string(step.gate.mode);
    j["token"] = step.token;
    auto candidates = nlohmann::ordered_json::array();
    const auto tokens = step.candidates.tokens();
    const auto probs = step.candidates.probs();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        candidates.push_back(nlohmann::ordered_json::array({tokens[i], probs[i]}));
    }
    j["top_candidates"] = std::move(candidates);
    j["dominant_prob"] = step.dominant_prob;
    j["runner_up_prob"] = step.runner_up_prob;
    return j.dump();
}

void write_trace_jsonl(std::ostream& out, const Transcript& transcript, std::optional<std::size_t> task) {
    for (const StepTrace& step : transcript.steps) {
        out << trace_line(step, task) << '\n';
    }
}

TraceRecord parse_trace_line(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        if (j.at("schema").get<std::string>() != kTraceSchema) {
            throw Error(ErrorKind::format, "unsupported trace schema");
        }
        TraceRecord r;
        r.step = j.at("step").get<std::size_t>();
        r.entropy_raw = j.at("entropy_raw").get<double>();
        r.entropy_norm = j.at("entropy_norm").get<double>();
        r.mode = j.at("mode").get<std::string>();
        r.gate = j.at("gate").get<std::string>();
        r.token = j.at("token").get<TokenId>();
        for (const auto& pair : j.at("top_candidates")) {
            r.top_candidates.emplace_back(pair.at(0).get<TokenId>(), pair.at(1).get<double>());
        }
        r.dominant_prob = j.at("dominant_prob").get<double>();
        r.runner_up_prob = j.at("runner_up_prob").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::format, std::string("malformed trace line: ") + e.what());
    }
}

} // namespace glr
