#include "glr/harness/experiment.hpp"

#include "glr/error.hpp"
#include "glr/harness/format.hpp"
#include "glr/rng.hpp"
#include "glr/trace_io.hpp"
#include "glr/weights.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace glr {

namespace {

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += (i ? ", " : "") + items[i];
    }
    return out;
}

template <typename T, typename F>
std::string join_mapped(const std::vector<T>& items, F f) {
    std::vector<std::string> text;
    for (const T& item : items) {
        text.push_back(f(item));
    }
    return join(text);
}

std::string shape_name(SweepShape shape) { return shape == SweepShape::cartesian ? "cartesian" : "appendix"; }

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw Error(ErrorKind::configuration, "'output': cannot create directory " + dir.string());
    }
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::configuration, "'output': cannot write " + path.string());
    }
    return out;
}

const ScriptedModel* as_scripted(const Model& model) { return dynamic_cast<const ScriptedModel*>(&model); }

DecodeConfig cell_decode_config(const ExperimentConfig& cfg, const SweepCell& cell) {
    DecodeConfig d = cfg.decode;
    d.method = cell.method;
    d.tau = cell.tau;
    d.gate_k = cell.gate_k;
    d.seed = cell.seed;
    return d;
}

std::vector<std::vector<TokenId>> gold_answers(const std::vector<ScriptedTask>& tasks) {
    std::vector<std::vector<TokenId>> gold;
    for (const ScriptedTask& t : tasks) {
        gold.push_back(t.gold);
    }
    return gold;
}

void check_vocabulary(const Model& model, const std::vector<ScriptedTask>& tasks, const ExperimentConfig& cfg) {
    for (const ScriptedTask& t : tasks) {
        if (t.max_token() >= model.vocab_size()) {
            throw Error(ErrorKind::configuration, "'task_suite': token " + std::to_string(t.max_token()) +
                                                      " exceeds model vocabulary " +
                                                      std::to_string(model.vocab_size()));
        }
    }
    if (cfg.decode.eos_token >= model.vocab_size()) {
        throw Error(ErrorKind::configuration, "'decode.eos_token': outside model vocabulary");
    }
}

void write_cell(const std::filesystem::path& dir, const std::vector<ScriptedTask>& tasks,
                const std::vector<Transcript>& transcripts, const EvalReport& report, const ExperimentConfig& cfg) {
    ensure_directory(dir / "traces");
    for (std::size_t i = 0; i < transcripts.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "task_%04zu.jsonl", i);
        auto out = open_output(dir / "traces" / name);
        write_trace_jsonl(out, transcripts[i], i);
    }
    {
        auto out = open_output(dir / "transcripts.jsonl");
        for (std::size_t i = 0; i < transcripts.size(); ++i) {
            const Transcript& tr = transcripts[i];
            nlohmann::ordered_json j;
            j["task"] = i;
            j["prompt"] = tr.prompt;
            j["tokens"] = tr.tokens;
            j["termination"] = to_string(tr.termination);
            j["answer"] = answer_span(tr, cfg.separator_token, cfg.decode.eos_token);
            j["gold"] = tasks[i].gold;
            j["correct"] = report.rows[i].correct;
            j["steps"] = tr.steps.size();
            j["activation_frequency"] = report.rows[i].activation_frequency;
            out << j.dump() << '\n';
        }
    }
    auto out = open_output(dir / "histogram.tsv");
    write_histogram_tsv(out, entropy_histogram(transcripts, cfg.histogram_bins));
}

} // namespace

ExperimentConfig ExperimentConfig::from_kv(const KeyValueConfig& kv) {
    ExperimentConfig cfg;
    cfg.model.kind = kv.get_string("model.kind", cfg.model.kind);
    cfg.model.path = kv.get_string("model.path", "");
    if (cfg.model.kind == "toy") {
        auto& t = cfg.model.toy;
        t.layers = kv.get_uint("model.layers", t.layers);
        t.dim = kv.get_uint("model.dim", t.dim);
        t.heads = kv.get_uint("model.heads", t.heads);
        t.vocab = kv.get_uint("model.vocab", t.vocab);
        t.context = kv.get_uint("model.context", t.context);
        t.seed = kv.get_uint("model.seed", t.seed);
    } else if (cfg.model.kind == "scripted") {
        auto& s = cfg.model.scripted;
        s.vocab = kv.get_uint("model.vocab", s.vocab);
        s.dim = kv.get_uint("model.dim", s.dim);
        s.context = kv.get_uint("model.context", s.context);
        s.seed = kv.get_uint("model.seed", s.seed);
    } else if (cfg.model.kind != "weights") {
        throw Error(ErrorKind::configuration, "'model.kind': expected toy, weights or scripted, got '" +
                                                  cfg.model.kind + "'");
    }

    cfg.task_suite = kv.get_string("task_suite", "");
    cfg.methods.clear();
    for (const std::string& name : kv.get_list("methods", {"selar", "cot_sampling"})) {
        try {
            cfg.methods.push_back(parse_method(name));
        } catch (const Error&) {
            throw Error(ErrorKind::configuration, "'methods': unknown method '" + name + "'");
        }
    }

    DecodeConfig& d = cfg.decode;
    d.tau = kv.get_double("decode.tau", d.tau);
    d.gate_k = kv.get_uint("decode.gate_k", d.gate_k);
    d.max_steps = kv.get_uint("decode.max_steps", d.max_steps);
    d.eos_token = static_cast<TokenId>(kv.get_uint("decode.eos_token", kEosToken));
    cfg.separator_token = static_cast<TokenId>(kv.get_uint("decode.separator_token", cfg.separator_token));
    d.sampler.temperature = kv.get_double("decode.temperature", d.sampler.temperature);
    d.sampler.top_p = kv.get_double("decode.top_p", d.sampler.top_p);
    d.sampler.top_k = kv.get_uint("decode.top_k", d.sampler.top_k);
    d.sampler.min_p = kv.get_double("decode.min_p", d.sampler.min_p);
    d.regularization.epsilon = kv.get_double("decode.epsilon", d.regularization.epsilon);
    d.regularization.enabled = kv.get_bool("decode.regularization", d.regularization.enabled);
    d.gating_enabled = kv.get_bool("decode.gating", d.gating_enabled);
    d.soft_full_vocab = kv.get_bool("decode.soft_full_vocab", d.soft_full_vocab);

    const std::string shape = kv.get_string("sweep.shape", shape_name(cfg.shape));
    if (shape == "cartesian") {
        cfg.shape = SweepShape::cartesian;
    } else if (shape == "appendix") {
        cfg.shape = SweepShape::appendix;
    } else {
        throw Error(ErrorKind::configuration, "'sweep.shape': expected cartesian or appendix");
    }
    cfg.tau_grid = kv.get_doubles("sweep.tau", cfg.tau_grid);
    std::vector<std::uint64_t> ks(cfg.k_grid.begin(), cfg.k_grid.end());
    ks = kv.get_uints("sweep.gate_k", ks);
    cfg.k_grid.assign(ks.begin(), ks.end());
    cfg.seeds = kv.get_uints("seeds", cfg.seeds);
    cfg.histogram_bins = kv.get_uint("analysis.histogram_bins", cfg.histogram_bins);
    cfg.jobs = kv.get_uint("jobs", cfg.jobs);
    kv.get_string("output", ""); // accepted; the CLI resolves it
    kv.require_all_used();
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    return from_kv(KeyValueConfig::load(path));
}

KeyValueConfig ExperimentConfig::to_kv() const {
    KeyValueConfig kv;
    kv.set("model.kind", model.kind);
    if (!model.path.empty()) {
        kv.set("model.path", model.path);
    }
    if (model.kind == "toy") {
        kv.set("model.layers", std::to_string(model.toy.layers));
        kv.set("model.dim", std::to_string(model.toy.dim));
        kv.set("model.heads", std::to_string(model.toy.heads));
        kv.set("model.vocab", std::to_string(model.toy.vocab));
        kv.set("model.context", std::to_string(model.toy.context));
        kv.set("model.seed", std::to_string(model.toy.seed));
    } else if (model.kind == "scripted") {
        kv.set("model.vocab", std::to_string(model.scripted.vocab));
        kv.set("model.dim", std::to_string(model.scripted.dim));
        kv.set("model.context", std::to_string(model.scripted.context));
        kv.set("model.seed", std::to_string(model.scripted.seed));
    }
    kv.set("task_suite", task_suite);
    kv.set("methods", join_mapped(methods, [](Method m) { return std::string(to_string(m)); }));
    kv.set("decode.tau", format_double(decode.tau));
    kv.set("decode.gate_k", std::to_string(decode.gate_k));
    kv.set("decode.max_steps", std::to_string(decode.max_steps));
    kv.set("decode.eos_token", std::to_string(decode.eos_token));
    kv.set("decode.separator_token", std::to_string(separator_token));
    kv.set("decode.temperature", format_double(decode.sampler.temperature));
    kv.set("decode.top_p", format_double(decode.sampler.top_p));
    kv.set("decode.top_k", std::to_string(decode.sampler.top_k));
    kv.set("decode.min_p", format_double(decode.sampler.min_p));
    kv.set("decode.epsilon", format_double(decode.regularization.epsilon));
    kv.set("decode.regularization", decode.regularization.enabled ? "true" : "false");
    kv.set("decode.gating", decode.gating_enabled ? "true" : "false");
    kv.set("decode.soft_full_vocab", decode.soft_full_vocab ? "true" : "false");
    kv.set("sweep.shape", shape_name(shape));
    kv.set("sweep.tau", join_mapped(tau_grid, format_double));
    kv.set("sweep.gate_k", join_mapped(k_grid, [](std::size_t k) { return std::to_string(k); }));
    kv.set("seeds", join_mapped(seeds, [](std::uint64_t s) { return std::to_string(s); }));
    kv.set("analysis.histogram_bins", std::to_string(histogram_bins));
    return kv;
}

void ExperimentConfig::validate() const {
    if (task_suite.empty()) {
        throw Error(ErrorKind::configuration, "'task_suite': not set");
    }
    if (model.kind == "weights" && model.path.empty()) {
        throw Error(ErrorKind::configuration, "'model.path': required for model.kind = weights");
    }
    if (methods.empty()) {
        throw Error(ErrorKind::configuration, "'methods': empty");
    }
    if (tau_grid.empty()) {
        throw Error(ErrorKind::configuration, "'sweep.tau': empty grid");
    }
    for (double t : tau_grid) {
        if (!(t >= 0.0 && t <= 1.0)) {
            throw Error(ErrorKind::configuration, "'sweep.tau': " + format_double(t) + " outside [0, 1]");
        }
    }
    if (k_grid.empty()) {
        throw Error(ErrorKind::configuration, "'sweep.gate_k': empty grid");
    }
    for (std::size_t k : k_grid) {
        if (k < 2) {
            throw Error(ErrorKind::configuration, "'sweep.gate_k': values must be >= 2");
        }
    }
    if (seeds.empty()) {
        throw Error(ErrorKind::configuration, "'seeds': empty");
    }
    if (histogram_bins < 2) {
        throw Error(ErrorKind::configuration, "'analysis.histogram_bins': must be >= 2");
    }
    if (jobs < 1) {
        throw Error(ErrorKind::configuration, "'jobs': must be >= 1");
    }
    try {
        decode.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::configuration, std::string("'decode': ") + e.what());
    }
}

std::string SweepCell::name() const {
    return std::string(to_string(method)) + "_tau" + format_double(tau) + "_k" + std::to_string(gate_k) + "_seed" +
           std::to_string(seed);
}

std::vector<SweepCell> sweep_cells(const ExperimentConfig& cfg) {
    std::vector<std::pair<double, std::size_t>> grid;
    if (cfg.shape == SweepShape::cartesian) {
        for (double tau : cfg.tau_grid) {
            for (std::size_t k : cfg.k_grid) {
                grid.emplace_back(tau, k);
            }
        }
    } else {
        for (double tau : cfg.tau_grid) {
            grid.emplace_back(tau, cfg.decode.gate_k);
        }
        for (std::size_t k : cfg.k_grid) {
            const std::pair<double, std::size_t> point{cfg.decode.tau, k};
            if (std::find(grid.begin(), grid.end(), point) == grid.end()) {
                grid.push_back(point);
            }
        }
    }
    std::vector<SweepCell> cells;
    for (Method m : cfg.methods) {
        for (const auto& [tau, k] : grid) {
            for (std::uint64_t seed : cfg.seeds) {
                cells.push_back(SweepCell{m, tau, k, seed});
            }
        }
    }
    return cells;
}

std::shared_ptr<const Model> build_model(const ModelSpec& spec) {
    if (spec.kind == "toy") {
        return std::make_shared<ToyTransformer>(spec.toy);
    }
    if (spec.kind == "weights") {
        return load_weights(spec.path);
    }
    if (spec.kind == "scripted") {
        if (!spec.path.empty()) {
            return load_weights(spec.path);
        }
        return std::make_shared<ScriptedModel>(ScriptedModel::seeded(spec.scripted));
    }
    throw Error(ErrorKind::configuration, "'model.kind': unknown kind '" + spec.kind + "'");
}

std::vector<Transcript> decode_cell(const Model& model, const std::vector<ScriptedTask>& tasks,
                                    const ExperimentConfig& cfg, const SweepCell& cell) {
    DecodeConfig d = cell_decode_config(cfg, cell);
    const ScriptedModel* scripted = as_scripted(model);
    std::vector<Transcript> out;
    out.reserve(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        d.seed = mix_seed(cell.seed, i);
        if (scripted) {
            const ScriptedModel bound = scripted->with_forced(tasks[i].forced_table(model.vocab_size()));
            out.push_back(decode(bound, tasks[i].prompt, d));
        } else {
            out.push_back(decode(model, tasks[i].prompt, d));
        }
    }
    return out;
}

std::string report_row(const CellResult& r) {
    std::ostringstream row;
    row << to_string(r.cell.method) << ',' << format_double(r.cell.tau) << ',' << r.cell.gate_k << ','
        << r.cell.seed << ',' << format_double(r.report.accuracy) << ',' << format_double(r.report.t_c) << ','
        << format_double(r.report.t_w) << ',' << (r.report.tpca ? format_double(*r.report.tpca) : "") << ','
        << format_double(r.report.activation_frequency);
    return row.str();
}

std::vector<CellResult> run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    const std::vector<ScriptedTask> tasks = read_task_suite(cfg.task_suite);
    const std::shared_ptr<const Model> model = build_model(cfg.model);
    check_vocabulary(*model, tasks, cfg);
    const auto gold = gold_answers(tasks);

    ensure_directory(out_dir);
    {
        auto manifest = open_output(out_dir / "manifest.txt");
        manifest << cfg.to_kv().dump();
    }

    const std::vector<SweepCell> cells = sweep_cells(cfg);
    std::vector<CellResult> results(cells.size());
    std::vector<std::exception_ptr> failures(cells.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                const auto transcripts = decode_cell(*model, tasks, cfg, cells[i]);
                EvalReport report = summarize_run(transcripts, gold, cfg.separator_token, cfg.decode.eos_token);
                write_cell(out_dir / "cells" / cells[i].name(), tasks, transcripts, report, cfg);
                results[i] = CellResult{cells[i], std::move(report)};
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const std::size_t n = std::min(cfg.jobs, cells.size());
        for (std::size_t j = 1; j < n; ++j) {
            pool.emplace_back(worker);
        }
        worker();
    }
    for (const auto& failure : failures) {
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    auto report = open_output(out_dir / "report.csv");
    report << kReportHeader << '\n';
    for (const CellResult& r : results) {
        report << report_row(r) << '\n';
    }
    return results;
}

void write_histogram_tsv(std::ostream& out, const std::vector<HistogramBin>& bins) {
    out << "bin_left\tbin_right\tdensity\n";
    for (const HistogramBin& b : bins) {
        out << format_double(b.left) << '\t' << format_double(b.right) << '\t' << format_double(b.density) << '\n';
    }
}

void write_overlap_csv(std::ostream& out, const OverlapResult& result) {
    out << "layer,o_top1_mean,o_top1_se,o_top2_mean,o_top2_se,variant,n\n";
    auto emit = [&](const OverlapProfile& p, const char* variant) {
        for (std::size_t l = 0; l < p.top1_mean.size(); ++l) {
            out << l << ',' << format_double(p.top1_mean[l]) << ',' << format_double(p.top1_se[l]) << ','
                << format_double(p.top2_mean[l]) << ',' << format_double(p.top2_se[l]) << ',' << variant << ','
                << p.n << '\n';
        }
    };
    emit(result.raw, "raw");
    emit(result.regularized, "regularized");
}

OverlapResult run_overlap_analysis(const ExperimentConfig& cfg, const OverlapAnalysisOptions& options,
                                   const std::filesystem::path& out_dir) {
    cfg.validate();
    const std::vector<ScriptedTask> tasks = read_task_suite(cfg.task_suite);
    const std::shared_ptr<const Model> model = build_model(cfg.model);
    check_vocabulary(*model, tasks, cfg);

    const SweepCell cell{Method::selar, cfg.decode.tau, cfg.decode.gate_k, cfg.seeds.front()};
    const std::vector<Transcript> transcripts = decode_cell(*model, tasks, cfg, cell);
    const auto branching =
        detect_branching_steps(transcripts, cfg.decode.tau, options.ratio_bound, options.max_n, cell.seed);
    if (branching.empty()) {
        throw Error(ErrorKind::empty_input, "no branching steps found in " + std::to_string(transcripts.size()) +
                                                " transcripts");
    }

    OverlapOptions lens;
    lens.k_lens = options.k_lens;
    lens.temperature = cfg.decode.sampler.temperature;
    lens.mixture_k = options.mixture_k == 0 ? cfg.decode.gate_k : options.mixture_k;
    lens.regularization = cfg.decode.regularization;

    OverlapSamples samples;
    if (const ScriptedModel* scripted = as_scripted(*model)) {
        // Forced tables differ per task, so each transcript replays on its own bound model.
        for (const BranchingStep& b : branching) {
            const ScriptedModel bound = scripted->with_forced(tasks[b.transcript].forced_table(model->vocab_size()));
            const OverlapSamples one = collect_overlaps(bound, transcripts, std::span(&b, 1), lens);
            samples.raw.insert(samples.raw.end(), one.raw.begin(), one.raw.end());
            samples.regularized.insert(samples.regularized.end(), one.regularized.begin(), one.regularized.end());
        }
    } else {
        samples = collect_overlaps(*model, transcripts, branching, lens);
    }
    OverlapResult result{aggregate_overlaps(samples.raw), aggregate_overlaps(samples.regularized)};

    ensure_directory(out_dir);
    auto out = open_output(out_dir / "overlap.csv");
    write_overlap_csv(out, result);
    return result;
}

} // namespace glr
