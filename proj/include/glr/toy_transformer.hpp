#pragma once

#include "glr/model.hpp"

#include <cstdint>
#include <memory>

namespace glr {

struct ToyTransformerConfig {
    std::size_t layers = 6;
    std::size_t dim = 64;
    std::size_t heads = 4;
    std::size_t vocab = 128;
    std::size_t context = 256;
    std::uint64_t seed = 42;

    void validate() const;
};

/// Small pre-norm decoder-only transformer with learned positions and a KV
/// cache. Weights are seeded and stored at float precision so a saved model
/// reloads bit-exactly.
class ToyTransformer final : public Model {
public:
    explicit ToyTransformer(const ToyTransformerConfig& config);
    static std::unique_ptr<ToyTransformer> from_weights(const WeightBundle& bundle);

    const ToyTransformerConfig& config() const noexcept { return config_; }

    std::size_t vocab_size() const override { return config_.vocab; }
    std::size_t dim() const override { return config_.dim; }
    std::size_t layer_count() const override { return config_.layers; }
    std::size_t context_length() const override { return config_.context; }
    const EmbeddingTable& embeddings() const override { return token_embed_; }
    WeightBundle export_weights() const override;

protected:
    ModelState fresh_state() const override;
    StepOutput forward(ModelState& state, std::span<const double> input) const override;
    Logits project(std::span<const double> hidden) const override;

private:
    struct Norm {
        std::vector<double> gain;
        std::vector<double> bias;
    };
    struct Block {
        Norm ln1;
        std::vector<double> wq, wk, wv, wo; // dim x dim
        Norm ln2;
        std::vector<double> w1, b1; // hidden x dim, hidden
        std::vector<double> w2, b2; // dim x hidden, dim
    };

    struct Uninitialized {};
    ToyTransformer(const ToyTransformerConfig& config, Uninitialized);

    std::size_t mlp_width() const noexcept { return 4 * config_.dim; }
    void normalize(const Norm& norm, std::span<const double> x, std::span<double> out) const;

    ToyTransformerConfig config_;
    EmbeddingTable token_embed_;
    std::vector<double> pos_embed_; // context x dim
    std::vector<Block> blocks_;
    Norm final_norm_;
    std::vector<double> unembed_; // vocab x dim
};

} // namespace glr
