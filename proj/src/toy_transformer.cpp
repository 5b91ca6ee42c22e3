#include "glr/toy_transformer.hpp"

#include "glr/error.hpp"
#include "glr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace glr {

namespace {

constexpr double kNormEps = 1e-5;

std::vector<double> gaussian(Rng& rng, std::size_t n, double stddev) {
    std::vector<double> out(n);
    for (double& v : out) {
        // Stored at float precision so that save/load is lossless.
        v = static_cast<double>(static_cast<float>(rng.normal() * stddev));
    }
    return out;
}

std::vector<double> filled(std::size_t n, double value) { return std::vector<double>(n, value); }

// out = W x, W is rows x cols row-major.
void matvec(std::span<const double> w, std::span<const double> x, std::span<double> out) {
    const std::size_t cols = x.size();
    for (std::size_t r = 0; r < out.size(); ++r) {
        const double* row = w.data() + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            acc += row[c] * x[c];
        }
        out[r] = acc;
    }
}

double gelu(double x) {
    constexpr double k = 0.7978845608028654; // sqrt(2/pi)
    return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

NamedTensor to_tensor(std::string name, std::vector<std::size_t> shape, std::span<const double> data) {
    NamedTensor t{std::move(name), std::move(shape), {}};
    t.data.reserve(data.size());
    for (double v : data) {
        t.data.push_back(static_cast<float>(v));
    }
    return t;
}

std::size_t parse_size(const WeightBundle& bundle, const std::string& key) {
    auto it = bundle.metadata.find(key);
    if (it == bundle.metadata.end()) {
        throw Error(ErrorKind::format, "weight metadata missing '" + key + "'");
    }
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(it->second, &pos);
        if (pos != it->second.size()) {
            throw std::invalid_argument(key);
        }
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw Error(ErrorKind::format, "weight metadata '" + key + "' is not an integer: " + it->second);
    }
}

class TensorLookup {
public:
    explicit TensorLookup(const WeightBundle& bundle) : bundle_(bundle) {}

    std::vector<double> take(const std::string& name, std::vector<std::size_t> shape) const {
        for (const NamedTensor& t : bundle_.tensors) {
            if (t.name != name) {
                continue;
            }
            if (t.shape != shape) {
                throw Error(ErrorKind::shape_mismatch, "tensor '" + name + "' has unexpected shape");
            }
            return std::vector<double>(t.data.begin(), t.data.end());
        }
        throw Error(ErrorKind::format, "tensor '" + name + "' missing from weights");
    }

private:
    const WeightBundle& bundle_;
};

std::string layer_name(std::size_t layer, const char* suffix) {
    return "layers." + std::to_string(layer) + "." + suffix;
}

} // namespace

void ToyTransformerConfig::validate() const {
    if (layers == 0 || dim == 0 || heads == 0 || vocab == 0 || context == 0) {
        throw Error(ErrorKind::invalid_parameter, "toy transformer dimensions must be positive");
    }
    if (dim % heads != 0) {
        throw Error(ErrorKind::invalid_parameter, "dim must be divisible by heads");
    }
}

ToyTransformer::ToyTransformer(const ToyTransformerConfig& config, Uninitialized) : config_(config) {
    config_.validate();
}

ToyTransformer::ToyTransformer(const ToyTransformerConfig& config) : ToyTransformer(config, Uninitialized{}) {
    const std::size_t d = config_.dim;
    const std::size_t h = mlp_width();
    const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));
    const double resid_std = proj_std / std::sqrt(2.0 * static_cast<double>(config_.layers));

    Rng rng(config_.seed);
    token_embed_ = EmbeddingTable(config_.vocab, d, gaussian(rng, config_.vocab * d, 1.0));
    pos_embed_ = gaussian(rng, config_.context * d, 0.1);
    blocks_.resize(config_.layers);
    for (Block& b : blocks_) {
        b.ln1 = {filled(d, 1.0), filled(d, 0.0)};
        b.wq = gaussian(rng, d * d, proj_std);
        b.wk = gaussian(rng, d * d, proj_std);
        b.wv = gaussian(rng, d * d, proj_std);
        b.wo = gaussian(rng, d * d, resid_std);
        b.ln2 = {filled(d, 1.0), filled(d, 0.0)};
        b.w1 = gaussian(rng, h * d, proj_std);
        b.b1 = gaussian(rng, h, 0.02);
        b.w2 = gaussian(rng, d * h, resid_std);
        b.b2 = gaussian(rng, d, 0.02);
    }
    final_norm_ = {filled(d, 1.0), gaussian(rng, d, 0.02)};
    unembed_ = gaussian(rng, config_.vocab * d, 0.3);
}

std::unique_ptr<ToyTransformer> ToyTransformer::from_weights(const WeightBundle& bundle) {
    auto kind = bundle.metadata.find("kind");
    if (kind == bundle.metadata.end() || kind->second != "toy_transformer") {
        throw Error(ErrorKind::format, "weights are not a toy_transformer");
    }
    ToyTransformerConfig cfg;
    cfg.layers = parse_size(bundle, "layers");
    cfg.dim = parse_size(bundle, "dim");
    cfg.heads = parse_size(bundle, "heads");
    cfg.vocab = parse_size(bundle, "vocab");
    cfg.context = parse_size(bundle, "context");
    cfg.seed = parse_size(bundle, "seed");

    std::unique_ptr<ToyTransformer> model(new ToyTransformer(cfg, Uninitialized{}));
    const std::size_t d = cfg.dim;
    const std::size_t h = model->mlp_width();
    const TensorLookup lookup(bundle);

    model->token_embed_ = EmbeddingTable(cfg.vocab, d, lookup.take("token_embed", {cfg.vocab, d}));
    model->pos_embed_ = lookup.take("pos_embed", {cfg.context, d});
    model->blocks_.resize(cfg.layers);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        Block& b = model->blocks_[l];
        b.ln1 = {lookup.take(layer_name(l, "ln1.gain"), {d}), lookup.take(layer_name(l, "ln1.bias"), {d})};
        b.wq = lookup.take(layer_name(l, "attn.wq"), {d, d});
        b.wk = lookup.take(layer_name(l, "attn.wk"), {d, d});
        b.wv = lookup.take(layer_name(l, "attn.wv"), {d, d});
        b.wo = lookup.take(layer_name(l, "attn.wo"), {d, d});
        b.ln2 = {lookup.take(layer_name(l, "ln2.gain"), {d}), lookup.take(layer_name(l, "ln2.bias"), {d})};
        b.w1 = lookup.take(layer_name(l, "mlp.w1"), {h, d});
        b.b1 = lookup.take(layer_name(l, "mlp.b1"), {h});
        b.w2 = lookup.take(layer_name(l, "mlp.w2"), {d, h});
        b.b2 = lookup.take(layer_name(l, "mlp.b2"), {d});
    }
    model->final_norm_ = {lookup.take("final_norm.gain", {d}), lookup.take("final_norm.bias", {d})};
    model->unembed_ = lookup.take("unembed", {cfg.vocab, d});
    if (bundle.tensors.size() != 5 + 12 * cfg.layers) {
        throw Error(ErrorKind::format, "weights contain unexpected extra tensors");
    }
    return model;
}

WeightBundle ToyTransformer::export_weights() const {
    const std::size_t d = config_.dim;
    const std::size_t h = mlp_width();
    WeightBundle bundle;
    bundle.metadata = {
        {"kind", "toy_transformer"},
        {"layers", std::to_string(config_.layers)},
        {"dim", std::to_string(config_.dim)},
        {"heads", std::to_string(config_.heads)},
        {"vocab", std::to_string(config_.vocab)},
        {"context", std::to_string(config_.context)},
        {"seed", std::to_string(config_.seed)},
    };
    auto& t = bundle.tensors;
    t.push_back(to_tensor("token_embed", {config_.vocab, d}, token_embed_.data()));
    t.push_back(to_tensor("pos_embed", {config_.context, d}, pos_embed_));
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
        const Block& b = blocks_[l];
        t.push_back(to_tensor(layer_name(l, "ln1.gain"), {d}, b.ln1.gain));
        t.push_back(to_tensor(layer_name(l, "ln1.bias"), {d}, b.ln1.bias));
        t.push_back(to_tensor(layer_name(l, "attn.wq"), {d, d}, b.wq));
        t.push_back(to_tensor(layer_name(l, "attn.wk"), {d, d}, b.wk));
        t.push_back(to_tensor(layer_name(l, "attn.wv"), {d, d}, b.wv));
        t.push_back(to_tensor(layer_name(l, "attn.wo"), {d, d}, b.wo));
        t.push_back(to_tensor(layer_name(l, "ln2.gain"), {d}, b.ln2.gain));
        t.push_back(to_tensor(layer_name(l, "ln2.bias"), {d}, b.ln2.bias));
        t.push_back(to_tensor(layer_name(l, "mlp.w1"), {h, d}, b.w1));
        t.push_back(to_tensor(layer_name(l, "mlp.b1"), {h}, b.b1));
        t.push_back(to_tensor(layer_name(l, "mlp.w2"), {d, h}, b.w2));
        t.push_back(to_tensor(layer_name(l, "mlp.b2"), {d}, b.b2));
    }
    t.push_back(to_tensor("final_norm.gain", {d}, final_norm_.gain));
    t.push_back(to_tensor("final_norm.bias", {d}, final_norm_.bias));
    t.push_back(to_tensor("unembed", {config_.vocab, d}, unembed_));
    return bundle;
}

ModelState ToyTransformer::fresh_state() const {
    ModelState state;
    state.caches().resize(config_.layers);
    for (auto& cache : state.caches()) {
        cache.keys.reserve(config_.context * config_.dim);
        cache.values.reserve(config_.context * config_.dim);
    }
    return state;
}

void ToyTransformer::normalize(const Norm& norm, std::span<const double> x, std::span<double> out) const {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) {
        mean += v;
    }
    mean /= n;
    double var = 0.0;
    for (double v : x) {
        var += (v - mean) * (v - mean);
    }
    var /= n;
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = (x[i] - mean) * inv * norm.gain[i] + norm.bias[i];
    }
}

StepOutput ToyTransformer::forward(ModelState& state, std::span<const double> input) const {
    const std::size_t d = config_.dim;
    const std::size_t heads = config_.heads;
    const std::size_t head_dim = d / heads;
    const std::size_t h = mlp_width();
    const std::size_t pos = state.step();
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    std::vector<double> x(d);
    for (std::size_t i = 0; i < d; ++i) {
        x[i] = input[i] + pos_embed_[pos * d + i];
    }

    std::vector<double> a(d), q(d), k(d), v(d), attn(d), o(d), hid(h), mlp(d);
    std::vector<double> scores(pos + 1);
    LayerActivations acts;
    acts.hidden.reserve(config_.layers);

    for (std::size_t l = 0; l < config_.layers; ++l) {
        const Block& b = blocks_[l];
        ModelState::LayerCache& cache = state.caches()[l];

        normalize(b.ln1, x, a);
        matvec(b.wq, a, q);
        matvec(b.wk, a, k);
        matvec(b.wv, a, v);
        cache.keys.insert(cache.keys.end(), k.begin(), k.end());
        cache.values.insert(cache.values.end(), v.begin(), v.end());

        for (std::size_t hd = 0; hd < heads; ++hd) {
            const std::size_t off = hd * head_dim;
            double max_score = -std::numeric_limits<double>::infinity();
            for (std::size_t p = 0; p <= pos; ++p) {
                const double* key = cache.keys.data() + p * d + off;
                double s = 0.0;
                for (std::size_t i = 0; i < head_dim; ++i) {
                    s += q[off + i] * key[i];
                }
                scores[p] = s * scale;
                max_score = std::max(max_score, scores[p]);
            }
            double total = 0.0;
            for (std::size_t p = 0; p <= pos; ++p) {
                scores[p] = std::exp(scores[p] - max_score);
                total += scores[p];
            }
            for (std::size_t i = 0; i < head_dim; ++i) {
                attn[off + i] = 0.0;
            }
            for (std::size_t p = 0; p <= pos; ++p) {
                const double w = scores[p] / total;
                const double* val = cache.values.data() + p * d + off;
                for (std::size_t i = 0; i < head_dim; ++i) {
                    attn[off + i] += w * val[i];
                }
            }
        }
        matvec(b.wo, attn, o);
        for (std::size_t i = 0; i < d; ++i) {
            x[i] += o[i];
        }

        normalize(b.ln2, x, a);
        matvec(b.w1, a, hid);
        for (std::size_t i = 0; i < h; ++i) {
            hid[i] = gelu(hid[i] + b.b1[i]);
        }
        matvec(b.w2, hid, mlp);
        for (std::size_t i = 0; i < d; ++i) {
            x[i] += mlp[i] + b.b2[i];
        }
        acts.hidden.push_back(x);
    }

    return StepOutput{project(x), std::move(acts)};
}

Logits ToyTransformer::project(std::span<const double> hidden) const {
    std::vector<double> normed(config_.dim);
    normalize(final_norm_, hidden, normed);
    std::vector<double> logits(config_.vocab);
    matvec(unembed_, normed, logits);
    return Logits(std::move(logits));
}

} // namespace glr
