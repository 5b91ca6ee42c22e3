#include "glr/decode.hpp"

#include "glr/error.hpp"

#include <algorithm>
#include <string>

namespace glr {

namespace {

enum class InputRule { discrete, soft_always, gated };

Transcript run(const Model& model, std::span<const TokenId> prompt, const DecodeConfig& cfg, Rng* rng,
               InputRule rule, bool greedy) {
    cfg.validate();
    if (prompt.empty()) {
        throw Error(ErrorKind::invalid_input, "decoding needs a non-empty prompt");
    }
    if (cfg.gate_k > model.vocab_size()) {
        throw Error(ErrorKind::invalid_parameter, "gate_k exceeds vocabulary size");
    }
    const EmbeddingTable& table = model.embeddings();

    Transcript out;
    out.prompt.assign(prompt.begin(), prompt.end());
    ModelState state = model.init_state(prompt);

    for (std::size_t t = 0; t < cfg.max_steps; ++t) {
        const Logits& logits = state.last_output()->logits;
        const ProbDist p = softmax(logits, cfg.sampler.temperature);
        TopKCandidates candidates = topk_renormalize(p, cfg.gate_k);
        const EntropyReading reading = entropy_reading(candidates);

        GateDecision decision = gate_decision(reading, cfg.tau);
        if (rule == InputRule::soft_always || (rule == InputRule::gated && !cfg.gating_enabled)) {
            decision.mode = GateMode::exploratory;
            decision.forced = true;
        }

        TokenId token = greedy ? p.argmax() : sample(filter_distribution(p, cfg.sampler), *rng);

        StepTrace trace;
        trace.step = t;
        trace.gate = decision;
        trace.token = token;
        trace.dominant_prob = candidates.probs()[0];
        trace.runner_up_prob = candidates.k() > 1 ? candidates.probs()[1] : 0.0;

        EmbeddingVector input;
        if (rule == InputRule::discrete || decision.mode == GateMode::deterministic) {
            const auto row = table.row(token);
            input.assign(row.begin(), row.end());
            trace.mode = InputMode::discrete;
        } else if (rule == InputRule::soft_always) {
            input = cfg.soft_full_vocab ? soft_embedding(p, table) : soft_embedding(candidates, table);
            trace.mode = InputMode::soft;
        } else {
            input = soft_embedding(candidates, table);
            trace.mode = InputMode::soft;
            if (cfg.regularization.enabled) {
                input = contrastive_regularize(input, table.row(candidates.dominant()), reading.normalized,
                                               cfg.regularization);
                trace.mode = InputMode::soft_regularized;
            }
        }
        trace.candidates = std::move(candidates);

        out.steps.push_back(std::move(trace));
        out.tokens.push_back(token);
        out.inputs.push_back(input);

        if (token == cfg.eos_token) {
            out.termination = Termination::eos;
            break;
        }
        if (state.step() >= model.context_length()) {
            out.termination = Termination::max_steps;
            break;
        }
        model.step(state, input);
    }
    return out;
}

} // namespace

std::string_view to_string(Method method) noexcept {
    switch (method) {
    case Method::selar: return "selar";
    case Method::cot_greedy: return "cot_greedy";
    case Method::cot_sampling: return "cot_sampling";
    case Method::soft_thinking: return "soft_thinking";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (Method m : {Method::selar, Method::cot_greedy, Method::cot_sampling, Method::soft_thinking}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw Error(ErrorKind::invalid_parameter, "unknown method '" + std::string(name) + "'");
}

std::string_view to_string(InputMode mode) noexcept {
    switch (mode) {
    case InputMode::discrete: return "discrete";
    case InputMode::soft: return "soft";
    case InputMode::soft_regularized: return "soft_regularized";
    }
    return "unknown";
}

std::string_view to_string(Termination t) noexcept { return t == Termination::eos ? "eos" : "max_steps"; }

void DecodeConfig::validate() const {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw Error(ErrorKind::invalid_parameter, "tau must lie in [0, 1]");
    }
    if (gate_k < 1 || (method == Method::selar && gate_k < 2)) {
        throw Error(ErrorKind::invalid_parameter, "gate_k must be >= 2 (>= 1 for baselines)");
    }
    if (max_steps < 1) {
        throw Error(ErrorKind::invalid_parameter, "max_steps must be >= 1");
    }
    if (!(regularization.epsilon > 0.0)) {
        throw Error(ErrorKind::invalid_parameter, "regularization epsilon must be positive");
    }
    sampler.validate();
}

EntropyReading entropy_reading(const TopKCandidates& candidates) {
    if (candidates.k() == 1) {
        return EntropyReading{0.0, 0.0, 1};
    }
    return read_entropy(candidates);
}

std::vector<TokenId> answer_span(const Transcript& transcript, TokenId separator, TokenId eos) {
    const auto& tokens = transcript.tokens;
    auto sep = std::find(tokens.rbegin(), tokens.rend(), separator);
    if (sep == tokens.rend()) {
        return {};
    }
    std::vector<TokenId> span(sep.base(), tokens.end());
    if (!span.empty() && span.back() == eos) {
        span.pop_back();
    }
    return span;
}

Transcript selar_decode(const Model& model, std::span<const TokenId> prompt, const DecodeConfig& cfg, Rng& rng) {
    if (cfg.method != Method::selar) {
        throw Error(ErrorKind::invalid_parameter, "selar_decode called with method " + std::string(to_string(cfg.method)));
    }
    return run(model, prompt, cfg, &rng, InputRule::gated, false);
}

Transcript cot_decode(const Model& model, std::span<const TokenId> prompt, const DecodeConfig& cfg, Rng& rng,
                      CotStrategy strategy) {
    return run(model, prompt, cfg, &rng, InputRule::discrete, strategy == CotStrategy::greedy);
}

Transcript soft_thinking_decode(const Model& model, std::span<const TokenId> prompt, const DecodeConfig& cfg, Rng& rng) {
    return run(model, prompt, cfg, &rng, InputRule::soft_always, false);
}

Transcript decode(const Model& model, std::span<const TokenId> prompt, const DecodeConfig& cfg) {
    Rng rng(cfg.seed);
    switch (cfg.method) {
    case Method::selar: return selar_decode(model, prompt, cfg, rng);
    case Method::cot_greedy: return cot_decode(model, prompt, cfg, rng, CotStrategy::greedy);
    case Method::cot_sampling: return cot_decode(model, prompt, cfg, rng, CotStrategy::sampling);
    case Method::soft_thinking: return soft_thinking_decode(model, prompt, cfg, rng);
    }
    throw Error(ErrorKind::invalid_parameter, "unknown method");
}

} // namespace glr
