#include "glr/analysis.hpp"

#include "glr/error.hpp"
#include "glr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace glr {

std::vector<HistogramBin> entropy_histogram(std::span<const Transcript> transcripts, std::size_t bins) {
    if (bins < 2) {
        throw Error(ErrorKind::invalid_parameter, "histogram needs at least 2 bins");
    }
    std::vector<std::size_t> counts(bins, 0);
    std::size_t total = 0;
    for (const Transcript& tr : transcripts) {
        for (const StepTrace& s : tr.steps) {
            const double h = std::clamp(s.gate.reading.normalized, 0.0, 1.0);
            const auto bin = std::min(static_cast<std::size_t>(h * static_cast<double>(bins)), bins - 1);
            ++counts[bin];
            ++total;
        }
    }
    if (total == 0) {
        throw Error(ErrorKind::empty_input, "no decoding steps to histogram");
    }
    const double width = 1.0 / static_cast<double>(bins);
    std::vector<HistogramBin> out(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        out[i].left = static_cast<double>(i) / static_cast<double>(bins);
        out[i].right = static_cast<double>(i + 1) / static_cast<double>(bins);
        out[i].density = static_cast<double>(counts[i]) / (static_cast<double>(total) * width);
    }
    return out;
}

double activation_frequency(std::span<const Transcript> transcripts) {
    std::size_t active = 0;
    std::size_t total = 0;
    for (const Transcript& tr : transcripts) {
        for (const StepTrace& s : tr.steps) {
            active += s.mode != InputMode::discrete ? 1 : 0;
            ++total;
        }
    }
    if (total == 0) {
        throw Error(ErrorKind::empty_input, "no decoding steps");
    }
    return static_cast<double>(active) / static_cast<double>(total);
}

std::vector<BranchingStep> detect_branching_steps(std::span<const Transcript> transcripts, double tau,
                                                  double ratio_bound, std::size_t max_n, std::uint64_t seed) {
    if (!(ratio_bound > 1.0)) {
        throw Error(ErrorKind::invalid_parameter, "ratio bound must exceed 1");
    }
    if (max_n < 1) {
        throw Error(ErrorKind::invalid_parameter, "max_n must be >= 1");
    }
    std::vector<BranchingStep> found;
    for (std::size_t i = 0; i < transcripts.size(); ++i) {
        for (const StepTrace& s : transcripts[i].steps) {
            if (!(s.gate.reading.normalized > tau) || s.candidates.k() < 2) {
                continue;
            }
            const double ratio = s.runner_up_prob > 0.0 ? s.dominant_prob / s.runner_up_prob
                                                        : std::numeric_limits<double>::infinity();
            if (ratio < ratio_bound) {
                found.push_back(BranchingStep{i, s.step, s.candidates.tokens()[0], s.candidates.tokens()[1],
                                              s.dominant_prob, s.runner_up_prob, ratio});
            }
        }
    }
    if (found.size() > max_n) {
        // Partial Fisher-Yates: the first max_n slots become a uniform sample.
        Rng rng(seed);
        for (std::size_t i = 0; i < max_n; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(found.size() - i));
            std::swap(found[i], found[j]);
        }
        found.resize(max_n);
        std::sort(found.begin(), found.end(), [](const BranchingStep& a, const BranchingStep& b) {
            return a.transcript != b.transcript ? a.transcript < b.transcript : a.step < b.step;
        });
    }
    return found;
}

double topk_overlap(std::span<const TokenId> a, std::span<const TokenId> b, std::size_t k) {
    if (k == 0 || a.size() != k || b.size() != k) {
        throw Error(ErrorKind::invalid_input, "overlap sets must both have exactly k elements");
    }
    std::vector<TokenId> sa(a.begin(), a.end());
    std::vector<TokenId> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::vector<TokenId> common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
    return static_cast<double>(common.size()) / static_cast<double>(k);
}

LensSnapshot lens_snapshot(const Model& model, const LayerActivations& activations, std::size_t k_lens) {
    LensSnapshot snap;
    snap.layers.reserve(activations.hidden.size());
    for (std::size_t l = 0; l < activations.hidden.size(); ++l) {
        snap.layers.push_back(top_tokens(model.logit_lens(activations.hidden[l], l), k_lens));
    }
    return snap;
}

StepOverlap step_overlap(const LensSnapshot& soft, const LensSnapshot& top1, const LensSnapshot& top2,
                         std::size_t k_lens) {
    const std::size_t layers = soft.layers.size();
    if (top1.layers.size() != layers || top2.layers.size() != layers) {
        throw Error(ErrorKind::invalid_input, "lens snapshots disagree on layer count");
    }
    StepOverlap out;
    for (std::size_t l = 0; l < layers; ++l) {
        out.top1.push_back(topk_overlap(soft.layers[l], top1.layers[l], k_lens));
        out.top2.push_back(topk_overlap(soft.layers[l], top2.layers[l], k_lens));
    }
    return out;
}

namespace {

void mean_and_se(const std::vector<double>& xs, double& mean, double& se) {
    const double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    mean = sum / n;
    if (xs.size() < 2) {
        se = 0.0;
        return;
    }
    double sq = 0.0;
    for (double x : xs) {
        sq += (x - mean) * (x - mean);
    }
    se = std::sqrt(sq / (n - 1.0)) / std::sqrt(n);
}

} // namespace

OverlapProfile aggregate_overlaps(std::span<const StepOverlap> steps) {
    if (steps.empty()) {
        throw Error(ErrorKind::empty_input, "no step overlaps to aggregate");
    }
    const std::size_t layers = steps.front().top1.size();
    OverlapProfile out;
    out.n = steps.size();
    out.top1_mean.resize(layers);
    out.top1_se.resize(layers);
    out.top2_mean.resize(layers);
    out.top2_se.resize(layers);
    std::vector<double> col1(steps.size());
    std::vector<double> col2(steps.size());
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t i = 0; i < steps.size(); ++i) {
            if (steps[i].top1.size() != layers || steps[i].top2.size() != layers) {
                throw Error(ErrorKind::invalid_input, "step overlaps disagree on layer count");
            }
            col1[i] = steps[i].top1[l];
            col2[i] = steps[i].top2[l];
        }
        mean_and_se(col1, out.top1_mean[l], out.top1_se[l]);
        mean_and_se(col2, out.top2_mean[l], out.top2_se[l]);
    }
    return out;
}

OverlapSamples collect_overlaps(const Model& model, std::span<const Transcript> transcripts,
                                std::span<const BranchingStep> branching, const OverlapOptions& options) {
    if (branching.empty()) {
        throw Error(ErrorKind::empty_input, "no branching steps");
    }
    if (!model.has_layer_access()) {
        throw Error(ErrorKind::unsupported_model, "model does not expose per-layer hidden states");
    }
    if (options.k_lens < 1 || options.k_lens > model.vocab_size()) {
        throw Error(ErrorKind::invalid_parameter, "k_lens outside [1, vocab]");
    }
    if (options.mixture_k < 1) {
        throw Error(ErrorKind::invalid_parameter, "mixture_k must be >= 1");
    }

    // Group by transcript so each is replayed once, in step order.
    std::map<std::size_t, std::vector<std::size_t>> by_transcript;
    for (const BranchingStep& b : branching) {
        if (b.transcript >= transcripts.size() || b.step >= transcripts[b.transcript].steps.size()) {
            throw Error(ErrorKind::invalid_input, "branching step refers outside the transcripts");
        }
        by_transcript[b.transcript].push_back(b.step);
    }

    const EmbeddingTable& table = model.embeddings();
    OverlapSamples samples;
    for (auto& [index, steps] : by_transcript) {
        std::sort(steps.begin(), steps.end());
        const Transcript& tr = transcripts[index];
        ModelState state = model.init_state(tr.prompt);
        std::size_t fed = 0;
        for (std::size_t t : steps) {
            while (fed < t) {
                model.step(state, tr.inputs[fed]);
                ++fed;
            }
            const ProbDist p = softmax(state.last_output()->logits, options.temperature);
            const TopKCandidates refs = topk_renormalize(p, std::max<std::size_t>(2, options.mixture_k));
            const TopKCandidates mix = topk_renormalize(p, options.mixture_k);
            const EmbeddingVector soft = soft_embedding(mix, table);
            const double h = entropy_reading(mix).normalized;
            const EmbeddingVector regularized =
                contrastive_regularize(soft, table.row(refs.tokens()[0]), h, options.regularization);

            const ModelState cached = snapshot(state);
            auto pass = [&](std::span<const double> input) {
                ModelState replica = restore(cached);
                return lens_snapshot(model, model.step(replica, input).activations, options.k_lens);
            };
            const LensSnapshot top1 = pass(table.row(refs.tokens()[0]));
            const LensSnapshot top2 = pass(table.row(refs.tokens()[1]));
            samples.raw.push_back(step_overlap(pass(soft), top1, top2, options.k_lens));
            samples.regularized.push_back(step_overlap(pass(regularized), top1, top2, options.k_lens));
        }
    }
    return samples;
}

OverlapResult overlap_profile(const Model& model, std::span<const Transcript> transcripts,
                              std::span<const BranchingStep> branching, const OverlapOptions& options) {
    const OverlapSamples samples = collect_overlaps(model, transcripts, branching, options);
    return OverlapResult{aggregate_overlaps(samples.raw), aggregate_overlaps(samples.regularized)};
}

double tpca(double alpha, double t_c, double t_w) {
    if (alpha == 0.0) {
        throw Error(ErrorKind::undefined_metric, "tokens per correct answer is undefined at zero accuracy");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw Error(ErrorKind::invalid_parameter, "accuracy must lie in (0, 1]");
    }
    if (!(t_c >= 0.0) || !(t_w >= 0.0)) {
        throw Error(ErrorKind::invalid_parameter, "token counts must be non-negative");
    }
    return (alpha * t_c + (1.0 - alpha) * t_w) / alpha;
}

EvalReport summarize_run(std::span<const Transcript> transcripts, std::span<const std::vector<TokenId>> gold,
                         TokenId separator, TokenId eos) {
    if (transcripts.empty()) {
        throw Error(ErrorKind::empty_input, "no transcripts to summarize");
    }
    if (transcripts.size() != gold.size()) {
        throw Error(ErrorKind::invalid_input, std::to_string(transcripts.size()) + " transcripts but " +
                                                  std::to_string(gold.size()) + " gold answers");
    }
    EvalReport report;
    std::size_t correct = 0;
    double correct_tokens = 0.0;
    double wrong_tokens = 0.0;
    for (std::size_t i = 0; i < transcripts.size(); ++i) {
        const Transcript& tr = transcripts[i];
        TranscriptRow row;
        row.tokens = tr.tokens.size();
        row.correct = answer_span(tr, separator, eos) == gold[i];
        row.activation_frequency = activation_frequency(std::span<const Transcript>(&tr, 1));
        if (row.correct) {
            ++correct;
            correct_tokens += static_cast<double>(row.tokens);
        } else {
            wrong_tokens += static_cast<double>(row.tokens);
        }
        report.rows.push_back(row);
    }
    const std::size_t wrong = transcripts.size() - correct;
    report.accuracy = static_cast<double>(correct) / static_cast<double>(transcripts.size());
    report.t_c = correct > 0 ? correct_tokens / static_cast<double>(correct) : 0.0;
    report.t_w = wrong > 0 ? wrong_tokens / static_cast<double>(wrong) : 0.0;
    if (correct > 0) {
        report.tpca = tpca(report.accuracy, report.t_c, report.t_w);
    }
    report.activation_frequency = activation_frequency(transcripts);
    return report;
}

} // namespace glr
