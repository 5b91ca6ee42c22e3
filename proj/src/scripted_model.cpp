#include "glr/scripted_model.hpp"

#include "glr/error.hpp"
#include "glr/rng.hpp"

#include <cmath>
#include <string>

namespace glr {

namespace {

std::vector<double> float_gaussian(Rng& rng, std::size_t n, double stddev) {
    std::vector<double> out(n);
    for (double& v : out) {
        v = static_cast<double>(static_cast<float>(rng.normal() * stddev));
    }
    return out;
}

NamedTensor to_tensor(std::string name, std::vector<std::size_t> shape, std::span<const double> data) {
    NamedTensor t{std::move(name), std::move(shape), {}};
    t.data.assign(data.begin(), data.end());
    return t;
}

} // namespace

Logits forced_logits(const ProbDist& dist) {
    std::vector<double> out(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) {
        out[i] = dist[i] > 0.0 ? std::log(dist[i]) : kAbsentLogit;
    }
    return Logits(std::move(out));
}

ScriptedModel::ScriptedModel(EmbeddingTable embeddings, std::vector<double> weight, std::vector<double> bias,
                             std::size_t context) {
    const std::size_t v = embeddings.rows();
    const std::size_t d = embeddings.dim();
    if (weight.size() != v * d || bias.size() != v) {
        throw Error(ErrorKind::shape_mismatch, "scripted model projection does not match vocab x dim");
    }
    if (!all_finite(weight) || !all_finite(bias)) {
        throw Error(ErrorKind::invalid_input, "scripted model parameters must be finite");
    }
    if (context == 0) {
        throw Error(ErrorKind::invalid_parameter, "context must be positive");
    }
    params_ = std::make_shared<const Params>(Params{std::move(embeddings), std::move(weight), std::move(bias), context});
}

ScriptedModel ScriptedModel::seeded(const ScriptedModelConfig& config) {
    if (config.vocab == 0 || config.dim == 0) {
        throw Error(ErrorKind::invalid_parameter, "scripted model dimensions must be positive");
    }
    Rng rng(config.seed);
    auto table = float_gaussian(rng, config.vocab * config.dim, 1.0);
    auto weight = float_gaussian(rng, config.vocab * config.dim, 1.0 / std::sqrt(static_cast<double>(config.dim)));
    auto bias = float_gaussian(rng, config.vocab, 0.1);
    return ScriptedModel(EmbeddingTable(config.vocab, config.dim, std::move(table)), std::move(weight),
                         std::move(bias), config.context);
}

std::unique_ptr<ScriptedModel> ScriptedModel::from_weights(const WeightBundle& bundle) {
    auto kind = bundle.metadata.find("kind");
    if (kind == bundle.metadata.end() || kind->second != "scripted_linear") {
        throw Error(ErrorKind::format, "weights are not a scripted_linear model");
    }
    const NamedTensor* embed = nullptr;
    const NamedTensor* weight = nullptr;
    const NamedTensor* bias = nullptr;
    for (const NamedTensor& t : bundle.tensors) {
        if (t.name == "token_embed") {
            embed = &t;
        } else if (t.name == "proj.weight") {
            weight = &t;
        } else if (t.name == "proj.bias") {
            bias = &t;
        } else {
            throw Error(ErrorKind::format, "unexpected tensor '" + t.name + "'");
        }
    }
    if (!embed || !weight || !bias) {
        throw Error(ErrorKind::format, "scripted model needs token_embed, proj.weight, proj.bias");
    }
    if (embed->shape.size() != 2) {
        throw Error(ErrorKind::shape_mismatch, "tensor 'token_embed' must be 2-D");
    }
    const std::size_t v = embed->shape[0];
    const std::size_t d = embed->shape[1];
    if (weight->shape != std::vector<std::size_t>{v, d}) {
        throw Error(ErrorKind::shape_mismatch, "tensor 'proj.weight' has unexpected shape");
    }
    if (bias->shape != std::vector<std::size_t>{v}) {
        throw Error(ErrorKind::shape_mismatch, "tensor 'proj.bias' has unexpected shape");
    }
    std::size_t context = 1024;
    if (auto it = bundle.metadata.find("context"); it != bundle.metadata.end()) {
        context = static_cast<std::size_t>(std::stoull(it->second));
    }
    return std::make_unique<ScriptedModel>(
        EmbeddingTable(v, d, std::vector<double>(embed->data.begin(), embed->data.end())),
        std::vector<double>(weight->data.begin(), weight->data.end()),
        std::vector<double>(bias->data.begin(), bias->data.end()), context);
}

ScriptedModel ScriptedModel::with_forced(ForcedTable forced) const {
    for (const auto& [position, dist] : forced) {
        if (dist.size() != vocab_size()) {
            throw Error(ErrorKind::invalid_input,
                        "forced distribution at position " + std::to_string(position) + " has wrong vocabulary size");
        }
    }
    ScriptedModel copy = *this;
    copy.forced_ = std::make_shared<const ForcedTable>(std::move(forced));
    return copy;
}

Logits ScriptedModel::linear_logits(std::span<const double> input) const {
    const std::size_t v = vocab_size();
    const std::size_t d = dim();
    std::vector<double> out(v);
    for (std::size_t r = 0; r < v; ++r) {
        double acc = params_->bias[r];
        for (std::size_t c = 0; c < d; ++c) {
            acc += params_->weight[r * d + c] * input[c];
        }
        out[r] = acc;
    }
    return Logits(std::move(out));
}

StepOutput ScriptedModel::forward(ModelState& state, std::span<const double> input) const {
    LayerActivations acts;
    acts.hidden.emplace_back(input.begin(), input.end());
    if (forced_) {
        auto it = forced_->find(state.step() + 1);
        if (it != forced_->end()) {
            return StepOutput{forced_logits(it->second), std::move(acts)};
        }
    }
    return StepOutput{linear_logits(input), std::move(acts)};
}

Logits ScriptedModel::project(std::span<const double> hidden) const { return linear_logits(hidden); }

WeightBundle ScriptedModel::export_weights() const {
    WeightBundle bundle;
    bundle.metadata = {{"kind", "scripted_linear"}, {"context", std::to_string(params_->context)}};
    bundle.tensors.push_back(to_tensor("token_embed", {vocab_size(), dim()}, params_->embeddings.data()));
    bundle.tensors.push_back(to_tensor("proj.weight", {vocab_size(), dim()}, params_->weight));
    bundle.tensors.push_back(to_tensor("proj.bias", {vocab_size()}, params_->bias));
    return bundle;
}

} // namespace glr
