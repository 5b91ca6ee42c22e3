#pragma once

/**
 * Abstract autoregressive model.
 *
 * A model consumes one input embedding per position and returns next-token
 * logits plus the hidden state after every layer. Inputs are arbitrary real
 * vectors of the embedding dimension, not only rows of the embedding table,
 * which is what allows mixed (soft) inputs to be fed.
 *
 * Parameters are immutable once constructed; a Model may be shared across
 * threads. ModelState is owned by exactly one decode run.
 */

#include "glr/core.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace glr {

struct LayerActivations {
    std::vector<std::vector<double>> hidden; ///< one vector per layer, most recent position
};

struct StepOutput {
    Logits logits;
    LayerActivations activations;
};

/// Per-sequence incremental state. Copying it is a snapshot.
class ModelState {
public:
    struct LayerCache {
        std::vector<double> keys;   ///< positions x dim, row-major
        std::vector<double> values; ///< positions x dim, row-major
    };

    std::size_t step() const noexcept { return step_; }

    /// Output of the most recent step, if any input has been consumed.
    const std::optional<StepOutput>& last_output() const noexcept { return last_; }

    // Backend access.
    std::vector<LayerCache>& caches() noexcept { return caches_; }
    const std::vector<LayerCache>& caches() const noexcept { return caches_; }

private:
    friend class Model;

    std::size_t step_ = 0;
    std::vector<LayerCache> caches_;
    std::optional<StepOutput> last_;
};

inline ModelState snapshot(const ModelState& state) { return state; }
inline ModelState restore(const ModelState& saved) { return saved; }

struct NamedTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<float> data;
};

/// Everything needed to persist a model: free-form metadata plus tensors.
struct WeightBundle {
    std::map<std::string, std::string> metadata;
    std::vector<NamedTensor> tensors;
};

class Model {
public:
    virtual ~Model() = default;

    virtual std::size_t vocab_size() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::size_t layer_count() const = 0;
    virtual std::size_t context_length() const = 0;
    virtual const EmbeddingTable& embeddings() const = 0;
    virtual bool has_layer_access() const { return true; }
    virtual WeightBundle export_weights() const = 0;

    /// Consumes the prompt's token embeddings. Throws context-overflow if
    /// the prompt does not leave room for at least one generated position.
    ModelState init_state(std::span<const TokenId> prompt) const;

    /// Feeds one input embedding and advances the state by one position.
    StepOutput step(ModelState& state, std::span<const double> input) const;

    /// Final normalization + unembedding applied to an arbitrary hidden state.
    Logits logit_lens(std::span<const double> hidden, std::size_t layer) const;

protected:
    virtual ModelState fresh_state() const { return ModelState{}; }
    virtual StepOutput forward(ModelState& state, std::span<const double> input) const = 0;
    virtual Logits project(std::span<const double> hidden) const = 0;

    static void set_step(ModelState& state, std::size_t step) noexcept { state.step_ = step; }
};

/// Ids of the k largest logits, ties to the lowest id.
std::vector<TokenId> top_tokens(const Logits& logits, std::size_t k);

} // namespace glr
