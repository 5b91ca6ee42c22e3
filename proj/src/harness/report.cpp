#include "glr/harness/report.hpp"

#include "glr/error.hpp"
#include "glr/harness/format.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace glr {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream in(line);
    std::string field;
    while (std::getline(in, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

double mean(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    return sum / static_cast<double>(xs.size());
}

std::optional<double> pct_delta(std::optional<double> value, std::optional<double> base) {
    if (!value || !base || *base == 0.0) {
        return std::nullopt;
    }
    return 100.0 * (*value - *base) / *base;
}

std::string opt_text(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

} // namespace

std::vector<CellResult> read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::empty_input, "no report.csv in " + path.parent_path().string());
    }
    std::string line;
    if (!std::getline(in, line) || line != kReportHeader) {
        throw Error(ErrorKind::format, path.string() + ": unexpected header");
    }
    std::vector<CellResult> cells;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 9) {
            throw Error(ErrorKind::format, path.string() + ":" + std::to_string(line_no) + ": expected 9 fields");
        }
        CellResult r;
        r.cell.method = parse_method(f[0]);
        r.cell.tau = parse_double(f[1], "tau");
        r.cell.gate_k = parse_uint(f[2], "gate_k");
        r.cell.seed = parse_uint(f[3], "seed");
        r.report.accuracy = parse_double(f[4], "accuracy");
        r.report.t_c = parse_double(f[5], "t_c");
        r.report.t_w = parse_double(f[6], "t_w");
        if (!f[7].empty()) {
            r.report.tpca = parse_double(f[7], "tpca");
        }
        r.report.activation_frequency = parse_double(f[8], "activation_freq");
        cells.push_back(std::move(r));
    }
    return cells;
}

SweepSummary summarize_sweep(const std::vector<CellResult>& cells, double anchor_tau, std::size_t anchor_k,
                             std::optional<Method> baseline) {
    if (cells.empty()) {
        throw Error(ErrorKind::empty_input, "sweep has no report rows");
    }
    using Key = std::tuple<int, double, std::size_t>;
    std::map<Key, std::vector<const CellResult*>> groups;
    for (const CellResult& c : cells) {
        groups[{static_cast<int>(c.cell.method), c.cell.tau, c.cell.gate_k}].push_back(&c);
    }

    SweepSummary summary;
    summary.anchor_tau = anchor_tau;
    summary.anchor_k = anchor_k;
    summary.baseline = baseline;
    for (const auto& [key, members] : groups) {
        SummaryRow row;
        row.method = static_cast<Method>(std::get<0>(key));
        row.tau = std::get<1>(key);
        row.gate_k = std::get<2>(key);
        row.seeds = members.size();
        std::vector<double> acc, tc, tw, tp, af;
        for (const CellResult* c : members) {
            acc.push_back(c->report.accuracy);
            tc.push_back(c->report.t_c);
            tw.push_back(c->report.t_w);
            af.push_back(c->report.activation_frequency);
            if (c->report.tpca) {
                tp.push_back(*c->report.tpca);
            }
        }
        row.accuracy = mean(acc);
        row.t_c = mean(tc);
        row.t_w = mean(tw);
        row.activation_frequency = mean(af);
        if (!tp.empty()) {
            row.tpca = mean(tp);
        }
        summary.rows.push_back(row);
    }

    // Rows are already ordered by (method, tau, gate_k), so the first maximum wins ties.
    std::map<Method, SummaryRow*> best;
    for (SummaryRow& row : summary.rows) {
        auto [it, fresh] = best.emplace(row.method, &row);
        if (!fresh && row.accuracy > it->second->accuracy) {
            it->second = &row;
        }
    }
    for (auto& [method, row] : best) {
        row->best = true;
    }

    if (baseline) {
        for (SummaryRow& row : summary.rows) {
            const auto base = std::find_if(summary.rows.begin(), summary.rows.end(), [&](const SummaryRow& b) {
                return b.method == *baseline && b.tau == row.tau && b.gate_k == row.gate_k;
            });
            if (base != summary.rows.end()) {
                row.delta_accuracy_pct = pct_delta(row.accuracy, base->accuracy);
                row.delta_tpca_pct = pct_delta(row.tpca, base->tpca);
            }
        }
    }
    return summary;
}

std::string summary_csv(const SweepSummary& summary) {
    std::ostringstream out;
    out << kSummaryHeader << '\n';
    for (const SummaryRow& r : summary.rows) {
        out << to_string(r.method) << ',' << format_double(r.tau) << ',' << r.gate_k << ',' << r.seeds << ','
            << format_double(r.accuracy) << ',' << format_double(r.t_c) << ',' << format_double(r.t_w) << ','
            << opt_text(r.tpca) << ',' << format_double(r.activation_frequency) << ',' << (r.best ? 1 : 0) << ','
            << opt_text(r.delta_accuracy_pct) << ',' << opt_text(r.delta_tpca_pct) << '\n';
    }
    return out.str();
}

std::string summary_markdown(const SweepSummary& summary) {
    std::vector<Method> methods;
    for (const SummaryRow& r : summary.rows) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
            methods.push_back(r.method);
        }
    }

    std::ostringstream out;
    out << "# Sweep summary\n";
    auto table = [&](Method m, const char* axis, auto keep) {
        std::vector<const SummaryRow*> rows;
        for (const SummaryRow& r : summary.rows) {
            if (r.method == m && keep(r)) {
                rows.push_back(&r);
            }
        }
        if (rows.empty()) {
            return;
        }
        out << "\n| " << axis << " | accuracy | tpca | activation_freq | seeds |\n";
        out << "|---|---|---|---|---|\n";
        for (const SummaryRow* r : rows) {
            const std::string value =
                std::string(axis) == "tau" ? format_double(r->tau) : std::to_string(r->gate_k);
            const std::string mark = r->best ? "**" : "";
            out << "| " << value << " | " << mark << format_double(r->accuracy) << mark << " | "
                << (r->tpca ? format_double(*r->tpca) : "n/a") << " | " << format_double(r->activation_frequency)
                << " | " << r->seeds << " |\n";
        }
    };
    for (Method m : methods) {
        out << "\n## " << to_string(m) << "\n";
        out << "\nVarying tau (gate_k = " << summary.anchor_k << ")\n";
        table(m, "tau", [&](const SummaryRow& r) { return r.gate_k == summary.anchor_k; });
        out << "\nVarying gate_k (tau = " << format_double(summary.anchor_tau) << ")\n";
        table(m, "gate_k", [&](const SummaryRow& r) { return r.tau == summary.anchor_tau; });
    }
    out << "\nBold marks the best mean accuracy per method (ties: lowest tau, then lowest gate_k).\n";
    return out.str();
}

SweepSummary sweep_report(const std::filesystem::path& run_dir, std::optional<Method> baseline) {
    const auto cells = read_report_csv(run_dir / "report.csv");
    double anchor_tau = cells.empty() ? 0.5 : cells.front().cell.tau;
    std::size_t anchor_k = cells.empty() ? 3 : cells.front().cell.gate_k;
    if (std::filesystem::exists(run_dir / "manifest.txt")) {
        const KeyValueConfig manifest = KeyValueConfig::load(run_dir / "manifest.txt");
        anchor_tau = manifest.get_double("decode.tau", anchor_tau);
        anchor_k = manifest.get_uint("decode.gate_k", anchor_k);
    }
    SweepSummary summary = summarize_sweep(cells, anchor_tau, anchor_k, baseline);

    std::ofstream csv(run_dir / "sweep_summary.csv", std::ios::binary);
    std::ofstream md(run_dir / "sweep_summary.md", std::ios::binary);
    if (!csv || !md) {
        throw Error(ErrorKind::io, "cannot write summary files in " + run_dir.string());
    }
    csv << summary_csv(summary);
    md << summary_markdown(summary);
    return summary;
}

} // namespace glr
