#pragma once

/**
 * Decode controllers.
 *
 * All four controllers share one step loop:
 *   1. take the logits produced by the current state,
 *   2. p = softmax(logits / temperature),
 *   3. read the truncated entropy over the top gate_k tokens of p,
 *   4. choose a readable token x_t (argmax for greedy, otherwise a draw
 *      from the top-k/min-p/top-p filtered p),
 *   5. build the next input embedding according to the method,
 *   6. stop on x_t == eos, when the context is full, or after max_steps.
 *
 * Method-specific input rules:
 *   cot_greedy / cot_sampling  the table row of x_t
 *   soft_thinking              the top-gate_k mixture every step
 *   selar                      the row of x_t at deterministic steps; at
 *                              exploratory steps the mixture, pushed away
 *                              from the dominant candidate when
 *                              regularization is enabled
 *
 * A selar run with gating_enabled = false treats every step as exploratory.
 */

#include "glr/core.hpp"
#include "glr/gate.hpp"
#include "glr/latent.hpp"
#include "glr/model.hpp"
#include "glr/rng.hpp"
#include "glr/sampling.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace glr {

enum class Method { selar, cot_greedy, cot_sampling, soft_thinking };

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view name);

struct DecodeConfig {
    Method method = Method::selar;
    double tau = 0.5;
    std::size_t gate_k = 3;
    std::size_t max_steps = 256;
    TokenId eos_token = 11;
    std::uint64_t seed = 0;
    SamplerConfig sampler;
    RegularizationConfig regularization;
    bool gating_enabled = true;
    /// soft_thinking only: mix over the whole vocabulary instead of the top gate_k.
    bool soft_full_vocab = false;

    void validate() const;
};

enum class InputMode { discrete, soft, soft_regularized };
std::string_view to_string(InputMode mode) noexcept;

struct StepTrace {
    std::size_t step = 0;
    GateDecision gate;
    TokenId token = 0;
    InputMode mode = InputMode::discrete;
    TopKCandidates candidates{{0}, {1.0}};
    double dominant_prob = 0.0;  ///< renormalized probability of candidates[0]
    double runner_up_prob = 0.0; ///< renormalized probability of candidates[1], 0 if k = 1
};

enum class Termination { eos, max_steps };
std::string_view to_string(Termination t) noexcept;

struct Transcript {
    std::vector<TokenId> prompt;
    std::vector<StepTrace> steps;
    Termination termination = Termination::max_steps;
    std::vector<TokenId> tokens;           ///< x_1..x_T, one per step
    std::vector<EmbeddingVector> inputs;   ///< input built at each step (the last may not have been fed)

    bool is_exploratory(std::size_t step) const {
        return steps[step].mode != InputMode::discrete;
    }
};

/// Tokens after the last occurrence of `separator`, with a trailing eos removed.
std::vector<TokenId> answer_span(const Transcript& transcript, TokenId separator, TokenId eos);

Transcript selar_decode(const Model& model, std::span<const TokenId> prompt, const DecodeConfig& cfg, Rng& rng);

enum class CotStrategy { greedy, sampling };
Transcript cot_decode(const Model& model, std::span<const TokenId> prompt, const DecodeConfig& cfg, Rng& rng,
                      CotStrategy strategy);

Transcript soft_thinking_decode(const Model& model, std::span<const TokenId> prompt, const DecodeConfig& cfg, Rng& rng);

/// Dispatches on cfg.method with a fresh Rng(cfg.seed).
Transcript decode(const Model& model, std::span<const TokenId> prompt, const DecodeConfig& cfg);

/// Entropy reading that also accepts k = 1 (reads as zero uncertainty).
EntropyReading entropy_reading(const TopKCandidates& candidates);

} // namespace glr
