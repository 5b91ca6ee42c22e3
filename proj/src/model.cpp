#include "glr/model.hpp"

#include "glr/error.hpp"

#include <algorithm>
#include <string>

namespace glr {

ModelState Model::init_state(std::span<const TokenId> prompt) const {
    if (prompt.size() >= context_length()) {
        throw Error(ErrorKind::context_overflow, "prompt of " + std::to_string(prompt.size()) +
                                                     " tokens does not fit context of " +
                                                     std::to_string(context_length()));
    }
    ModelState state = fresh_state();
    const EmbeddingTable& table = embeddings();
    for (TokenId id : prompt) {
        step(state, table.row(id));
    }
    return state;
}

StepOutput Model::step(ModelState& state, std::span<const double> input) const {
    if (input.size() != dim()) {
        throw Error(ErrorKind::invalid_input, "input dimension " + std::to_string(input.size()) +
                                                  " != model dimension " + std::to_string(dim()));
    }
    if (!all_finite(input)) {
        throw Error(ErrorKind::invalid_input, "input embedding has non-finite entries");
    }
    if (state.step_ >= context_length()) {
        throw Error(ErrorKind::context_overflow,
                    "state already holds " + std::to_string(state.step_) + " positions");
    }
    StepOutput out = forward(state, input);
    state.step_ += 1;
    state.last_ = out;
    return out;
}

Logits Model::logit_lens(std::span<const double> hidden, std::size_t layer) const {
    if (layer >= layer_count()) {
        throw Error(ErrorKind::invalid_parameter, "layer " + std::to_string(layer) + " outside [0, " +
                                                      std::to_string(layer_count()) + ")");
    }
    if (hidden.size() != dim()) {
        throw Error(ErrorKind::invalid_input, "hidden state dimension mismatch");
    }
    return project(hidden);
}

std::vector<TokenId> top_tokens(const Logits& logits, std::size_t k) {
    const auto values = logits.values();
    if (k > values.size()) {
        throw Error(ErrorKind::invalid_parameter, "k larger than vocabulary");
    }
    std::vector<TokenId> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = static_cast<TokenId>(i);
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](TokenId a, TokenId b) {
                          return values[a] > values[b] || (values[a] == values[b] && a < b);
                      });
    order.resize(k);
    return order;
}

} // namespace glr
