#pragma once

#include "glr/analysis.hpp"
#include "glr/decode.hpp"
#include "glr/harness/kv_config.hpp"
#include "glr/harness/tasks.hpp"
#include "glr/scripted_model.hpp"
#include "glr/toy_transformer.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace glr {

struct ModelSpec {
    std::string kind = "toy"; ///< toy | weights | scripted
    std::string path;         ///< weights: manifest; scripted: optional manifest
    ToyTransformerConfig toy;
    ScriptedModelConfig scripted;
};

enum class SweepShape {
    cartesian, ///< every tau x every gate_k
    appendix,  ///< tau grid at the anchor gate_k, plus gate_k grid at the anchor tau
};

struct ExperimentConfig {
    ModelSpec model;
    std::string task_suite;
    std::vector<Method> methods{Method::selar, Method::cot_sampling};
    DecodeConfig decode; ///< decode.tau / decode.gate_k double as sweep anchors
    TokenId separator_token = kSeparatorToken;
    SweepShape shape = SweepShape::appendix;
    std::vector<double> tau_grid{0.3, 0.4, 0.5, 0.6, 0.7};
    std::vector<std::size_t> k_grid{3, 5, 7};
    std::vector<std::uint64_t> seeds{1};
    std::size_t histogram_bins = 50;
    std::size_t jobs = 1;

    /// Reads every key; unknown keys or bad values raise configuration errors naming the key.
    static ExperimentConfig from_kv(const KeyValueConfig& kv);
    static ExperimentConfig load(const std::filesystem::path& path);
    /// Fully resolved form; feeding it back through from_kv reproduces this config.
    KeyValueConfig to_kv() const;
    void validate() const;
};

struct SweepCell {
    Method method = Method::selar;
    double tau = 0.5;
    std::size_t gate_k = 3;
    std::uint64_t seed = 0;

    std::string name() const;
};

/// Cells in canonical order: method, then grid order, then seed.
std::vector<SweepCell> sweep_cells(const ExperimentConfig& cfg);

/// Model described by the spec, shared read-only by every cell.
std::shared_ptr<const Model> build_model(const ModelSpec& spec);

struct CellResult {
    SweepCell cell;
    EvalReport report;
};

/// Decodes every task of the suite in every cell and writes the run directory:
///   manifest.txt, report.csv,
///   cells/<cell>/{transcripts.jsonl, histogram.tsv, traces/task_NNNN.jsonl}
std::vector<CellResult> run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Transcripts for one cell (no files written).
std::vector<Transcript> decode_cell(const Model& model, const std::vector<ScriptedTask>& tasks,
                                    const ExperimentConfig& cfg, const SweepCell& cell);

inline constexpr const char* kReportHeader = "method,tau,gate_k,seed,accuracy,t_c,t_w,tpca,activation_freq";
std::string report_row(const CellResult& result);

void write_histogram_tsv(std::ostream& out, const std::vector<HistogramBin>& bins);
void write_overlap_csv(std::ostream& out, const OverlapResult& result);

struct OverlapAnalysisOptions {
    double ratio_bound = 2.0;
    std::size_t max_n = 200;
    std::size_t k_lens = 10;
    std::size_t mixture_k = 0; ///< 0: use decode.gate_k
};

/// Decodes the suite with selar at the anchor (tau, gate_k) and the first
/// seed, detects branching steps and writes overlap.csv. Returns the profile.
OverlapResult run_overlap_analysis(const ExperimentConfig& cfg, const OverlapAnalysisOptions& options,
                                   const std::filesystem::path& out_dir);

} // namespace glr
