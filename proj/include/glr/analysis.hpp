#pragma once

/**
 * Measurement machinery over decode transcripts: entropy histograms,
 * activation frequency, branching-step detection, layer-wise logit-lens
 * overlap between soft and discrete continuations, and cost metrics.
 */

#include "glr/decode.hpp"
#include "glr/latent.hpp"
#include "glr/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace glr {

struct HistogramBin {
    double left = 0.0;
    double right = 0.0;
    double density = 0.0;
};

/// Density of normalized entropy over [0, 1] across every step of every
/// transcript. Bin i covers [i/bins, (i+1)/bins); 1.0 falls in the last bin.
std::vector<HistogramBin> entropy_histogram(std::span<const Transcript> transcripts, std::size_t bins = 50);

/// Fraction of steps fed a soft or regularized soft input.
double activation_frequency(std::span<const Transcript> transcripts);

struct BranchingStep {
    std::size_t transcript = 0;
    std::size_t step = 0;
    TokenId dominant = 0;
    TokenId runner_up = 0;
    double dominant_prob = 0.0;
    double runner_up_prob = 0.0;
    double ratio = 0.0;
};

/// Steps with normalized entropy above tau whose top-1/top-2 ratio is below
/// ratio_bound. When more than max_n qualify, max_n are drawn uniformly
/// without replacement using `seed`. Result is ordered by (transcript, step).
std::vector<BranchingStep> detect_branching_steps(std::span<const Transcript> transcripts, double tau,
                                                  double ratio_bound = 2.0, std::size_t max_n = 200,
                                                  std::uint64_t seed = 0);

/// |a intersect b| / k.
double topk_overlap(std::span<const TokenId> a, std::span<const TokenId> b, std::size_t k);

/// Per-layer top-k lens token sets for one forward pass.
struct LensSnapshot {
    std::vector<std::vector<TokenId>> layers;
};

LensSnapshot lens_snapshot(const Model& model, const LayerActivations& activations, std::size_t k_lens);

/// Overlap of one soft pass against the two discrete references, per layer.
struct StepOverlap {
    std::vector<double> top1;
    std::vector<double> top2;
};

StepOverlap step_overlap(const LensSnapshot& soft, const LensSnapshot& top1, const LensSnapshot& top2,
                         std::size_t k_lens);

struct OverlapProfile {
    std::vector<double> top1_mean;
    std::vector<double> top1_se;
    std::vector<double> top2_mean;
    std::vector<double> top2_se;
    std::size_t n = 0;
};

/// Per-layer mean and standard error (sample stdev / sqrt(n); 0 when n = 1).
OverlapProfile aggregate_overlaps(std::span<const StepOverlap> steps);

struct OverlapOptions {
    std::size_t k_lens = 10;
    double temperature = 0.6;
    /// Support of the soft mixture. 1 collapses the soft input onto the dominant token.
    std::size_t mixture_k = 3;
    RegularizationConfig regularization;
};

struct OverlapResult {
    OverlapProfile raw;
    OverlapProfile regularized;
};

/// Unaggregated per-step overlaps, in (transcript, step) order.
struct OverlapSamples {
    std::vector<StepOverlap> raw;
    std::vector<StepOverlap> regularized;
};

OverlapSamples collect_overlaps(const Model& model, std::span<const Transcript> transcripts,
                                std::span<const BranchingStep> branching, const OverlapOptions& options = {});

/// Replays each transcript to the branching step, then runs four passes from
/// the cached state: dominant token, runner-up token, unregularized mixture,
/// regularized mixture. Lens sets of the two mixture passes are compared
/// against the two token passes at every layer.
OverlapResult overlap_profile(const Model& model, std::span<const Transcript> transcripts,
                              std::span<const BranchingStep> branching, const OverlapOptions& options = {});

/// Tokens per correct answer: (alpha T_c + (1 - alpha) T_w) / alpha.
double tpca(double alpha, double t_c, double t_w);

struct TranscriptRow {
    bool correct = false;
    std::size_t tokens = 0;
    double activation_frequency = 0.0;
};

struct EvalReport {
    double accuracy = 0.0;
    double t_c = 0.0; ///< mean emitted tokens on correct transcripts (0 if none)
    double t_w = 0.0; ///< mean emitted tokens on wrong transcripts (0 if none)
    std::optional<double> tpca; ///< absent when accuracy is 0
    double activation_frequency = 0.0;
    std::vector<TranscriptRow> rows;
};

/// Exact-match accuracy on the answer span plus token accounting.
EvalReport summarize_run(std::span<const Transcript> transcripts, std::span<const std::vector<TokenId>> gold,
                         TokenId separator, TokenId eos);

} // namespace glr
