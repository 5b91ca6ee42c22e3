#pragma once

#include "glr/model.hpp"

#include <cstdint>
#include <map>
#include <memory>

namespace glr {

struct ScriptedModelConfig {
    std::size_t vocab = 64;
    std::size_t dim = 16;
    std::size_t context = 1024;
    std::uint64_t seed = 7;
};

/// Next-token distributions pinned by absolute position: the entry keyed n
/// replaces the logits emitted after the model has consumed n embeddings.
using ForcedTable = std::map<std::size_t, ProbDist>;

/// Logit value standing in for zero probability in forced rows. Far enough
/// below zero that exp underflows to exactly 0 at any temperature <= 1.
inline constexpr double kAbsentLogit = -1.0e4;

/// Linear analytic oracle: logits = W x + b for input x. Exposes one layer
/// whose activation is the input itself; the lens is the same affine map.
/// Optional forced rows override the linear output at given positions.
class ScriptedModel final : public Model {
public:
    ScriptedModel(EmbeddingTable embeddings, std::vector<double> weight, std::vector<double> bias,
                  std::size_t context);

    static ScriptedModel seeded(const ScriptedModelConfig& config);
    static std::unique_ptr<ScriptedModel> from_weights(const WeightBundle& bundle);

    /// Copy sharing the linear parameters, with a forced table attached.
    ScriptedModel with_forced(ForcedTable forced) const;

    /// W e + b, no forcing applied.
    Logits linear_logits(std::span<const double> input) const;

    std::size_t vocab_size() const override { return params_->embeddings.rows(); }
    std::size_t dim() const override { return params_->embeddings.dim(); }
    std::size_t layer_count() const override { return 1; }
    std::size_t context_length() const override { return params_->context; }
    const EmbeddingTable& embeddings() const override { return params_->embeddings; }
    WeightBundle export_weights() const override;

protected:
    StepOutput forward(ModelState& state, std::span<const double> input) const override;
    Logits project(std::span<const double> hidden) const override;

private:
    struct Params {
        EmbeddingTable embeddings;
        std::vector<double> weight; // vocab x dim
        std::vector<double> bias;   // vocab
        std::size_t context;
    };

    std::shared_ptr<const Params> params_;
    std::shared_ptr<const ForcedTable> forced_;
};

/// Finite logits whose softmax at temperature 1 reproduces dist (zeros map to kAbsentLogit).
Logits forced_logits(const ProbDist& dist);

} // namespace glr
