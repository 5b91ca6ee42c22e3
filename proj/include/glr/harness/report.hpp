#pragma once

#include "glr/harness/experiment.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace glr {

/// Parses report.csv back into cell results (per-transcript rows are left empty).
std::vector<CellResult> read_report_csv(const std::filesystem::path& path);

/// One (method, tau, gate_k) point averaged over its seeds.
struct SummaryRow {
    Method method = Method::selar;
    double tau = 0.0;
    std::size_t gate_k = 0;
    std::size_t seeds = 0;
    double accuracy = 0.0;
    double t_c = 0.0;
    double t_w = 0.0;
    std::optional<double> tpca; ///< mean over seeds where defined
    double activation_frequency = 0.0;
    bool best = false; ///< highest mean accuracy within the method
    std::optional<double> delta_accuracy_pct; ///< against the baseline method at the same (tau, gate_k)
    std::optional<double> delta_tpca_pct;
};

struct SweepSummary {
    std::vector<SummaryRow> rows; ///< method, then tau, then gate_k
    double anchor_tau = 0.5;
    std::size_t anchor_k = 3;
    std::optional<Method> baseline;
};

/// Ties on best accuracy go to the lowest tau, then the lowest gate_k.
SweepSummary summarize_sweep(const std::vector<CellResult>& cells, double anchor_tau, std::size_t anchor_k,
                             std::optional<Method> baseline = Method::cot_sampling);

inline constexpr const char* kSummaryHeader =
    "method,tau,gate_k,seeds,accuracy,t_c,t_w,tpca,activation_freq,best,delta_accuracy_pct,delta_tpca_pct";

std::string summary_csv(const SweepSummary& summary);
/// Tau table at the anchor gate_k and gate_k table at the anchor tau, per method.
std::string summary_markdown(const SweepSummary& summary);

/// Reads <run_dir>/report.csv and manifest.txt, writes sweep_summary.csv and sweep_summary.md.
SweepSummary sweep_report(const std::filesystem::path& run_dir, std::optional<Method> baseline = Method::cot_sampling);

} // namespace glr
