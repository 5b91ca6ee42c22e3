// glr: decode, sweep and analysis front end.

#include "glr/decode.hpp"
#include "glr/error.hpp"
#include "glr/harness/experiment.hpp"
#include "glr/harness/kv_config.hpp"
#include "glr/harness/report.hpp"
#include "glr/harness/tasks.hpp"
#include "glr/trace_io.hpp"
#include "glr/weights.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace glr;

struct Overrides {
    std::string config;
    std::string model;
    std::string method;
    std::optional<double> tau;
    std::optional<std::size_t> gate_k;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> max_steps;
    std::optional<std::size_t> jobs;
    std::string out;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "key-value experiment config");
    cmd->add_option("--model", o.model, "toy, scripted, or a weight manifest path");
    cmd->add_option("--method", o.method, "selar | cot_greedy | cot_sampling | soft_thinking");
    cmd->add_option("--tau", o.tau, "gate threshold in [0, 1]");
    cmd->add_option("--gate-k", o.gate_k, "candidates read by the gate");
    cmd->add_option("--seed", o.seed, "decode seed");
    cmd->add_option("--out", o.out, "output path");
}

void apply_model(ModelSpec& spec, const std::string& model) {
    if (model.empty()) {
        return;
    }
    if (model == "toy" || model == "scripted") {
        spec.kind = model;
        spec.path.clear();
    } else {
        spec.kind = "weights";
        spec.path = model;
    }
}

// Config file (if any) with command-line flags layered on top.
ExperimentConfig resolve(const Overrides& o, bool need_suite, std::string* output = nullptr) {
    KeyValueConfig kv;
    if (!o.config.empty()) {
        kv = KeyValueConfig::load(o.config);
    }
    if (output) {
        *output = kv.get_string("output", "");
    }
    if (!need_suite && !kv.has("task_suite")) {
        kv.set("task_suite", "-");
    }
    ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
    apply_model(cfg.model, o.model);
    if (!o.method.empty()) {
        cfg.decode.method = parse_method(o.method);
        cfg.methods = {cfg.decode.method};
    }
    if (o.tau) {
        cfg.decode.tau = *o.tau;
    }
    if (o.gate_k) {
        cfg.decode.gate_k = *o.gate_k;
    }
    if (o.seed) {
        cfg.decode.seed = *o.seed;
        cfg.seeds = {*o.seed};
    }
    if (o.max_steps) {
        cfg.decode.max_steps = *o.max_steps;
    }
    if (o.jobs) {
        cfg.jobs = *o.jobs;
    }
    cfg.validate();
    return cfg;
}

std::vector<TokenId> parse_prompt(const std::string& text) {
    std::vector<TokenId> prompt;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        prompt.push_back(static_cast<TokenId>(parse_uint(item, "--prompt")));
    }
    return prompt;
}

int run_decode(const Overrides& o, const std::string& prompt_text) {
    const ExperimentConfig cfg = resolve(o, false);
    const auto model = build_model(cfg.model);
    const Transcript tr = decode(*model, parse_prompt(prompt_text), cfg.decode);

    std::ofstream file;
    if (!o.out.empty()) {
        file.open(o.out, std::ios::binary);
        if (!file) {
            throw Error(ErrorKind::io, "cannot write " + o.out);
        }
    }
    write_trace_jsonl(o.out.empty() ? std::cout : file, tr);

    std::size_t exploratory = 0;
    for (std::size_t i = 0; i < tr.steps.size(); ++i) {
        exploratory += tr.is_exploratory(i) ? 1 : 0;
    }
    std::cerr << to_string(cfg.decode.method) << ": " << tr.steps.size() << " steps, " << exploratory
              << " exploratory, stopped on " << to_string(tr.termination) << "\n";
    return 0;
}

int run_sweep(const Overrides& o) {
    std::string output;
    const ExperimentConfig cfg = resolve(o, true, &output);
    if (!o.out.empty()) {
        output = o.out;
    }
    if (output.empty()) {
        throw Error(ErrorKind::configuration, "'output': set it in the config or pass --out");
    }
    const auto results = run_experiment(cfg, output);
    std::cerr << results.size() << " cells written to " << output << "\n";
    return 0;
}

int run_overlap(const Overrides& o, const OverlapAnalysisOptions& options) {
    std::string output;
    const ExperimentConfig cfg = resolve(o, true, &output);
    if (!o.out.empty()) {
        output = o.out;
    }
    if (output.empty()) {
        throw Error(ErrorKind::configuration, "'output': set it in the config or pass --out");
    }
    const OverlapResult result = run_overlap_analysis(cfg, options, output);
    std::cerr << "overlap over " << result.raw.n << " branching steps written to " << output << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entropy-gated latent reasoning decoder"};
    app.require_subcommand(1);

    Overrides decode_o;
    std::string prompt = "12,13,14";
    auto* decode_cmd = app.add_subcommand("decode", "decode one prompt and print its trace");
    add_common(decode_cmd, decode_o);
    decode_cmd->add_option("--prompt", prompt, "comma-separated token ids");
    decode_cmd->add_option("--max-steps", decode_o.max_steps, "step budget");

    Overrides sweep_o;
    auto* sweep_cmd = app.add_subcommand("sweep", "run the tau x gate_k grid over a task suite");
    add_common(sweep_cmd, sweep_o);
    sweep_cmd->add_option("--jobs", sweep_o.jobs, "concurrent cells");
    sweep_cmd->add_option("--max-steps", sweep_o.max_steps, "step budget");

    Overrides overlap_o;
    OverlapAnalysisOptions overlap_opts;
    auto* overlap_cmd = app.add_subcommand("analyze-overlap", "logit-lens overlap at branching steps");
    add_common(overlap_cmd, overlap_o);
    overlap_cmd->add_option("--ratio-bound", overlap_opts.ratio_bound, "top1/top2 ratio bound");
    overlap_cmd->add_option("--max-n", overlap_opts.max_n, "branching steps sampled");
    overlap_cmd->add_option("--k-lens", overlap_opts.k_lens, "lens top-k per layer");
    overlap_cmd->add_option("--mixture-k", overlap_opts.mixture_k, "soft mixture support (0: gate_k)");

    std::string kind_name = "copy";
    std::size_t count = 100;
    std::uint64_t task_seed = 0;
    std::string task_out = "tasks.jsonl";
    TaskGenOptions gen_opts;
    auto* gen_cmd = app.add_subcommand("gen-tasks", "write a synthetic task suite");
    gen_cmd->add_option("--kind", kind_name, "copy | modular_chain | forced_branch");
    gen_cmd->add_option("--count", count, "number of tasks")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", task_seed, "generator seed");
    gen_cmd->add_option("--out", task_out, "suite file");
    gen_cmd->add_option("--modulus", gen_opts.modulus, "modular_chain modulus");
    gen_cmd->add_option("--branch-width", gen_opts.branch_width, "forced_branch uniform width");
    gen_cmd->add_option("--steps", gen_opts.reasoning_steps, "forced_branch reasoning steps");

    std::string run_dir;
    std::string baseline = "cot_sampling";
    auto* report_cmd = app.add_subcommand("report", "summarize a sweep directory");
    report_cmd->add_option("run_dir", run_dir, "sweep output directory")->required();
    report_cmd->add_option("--baseline", baseline, "method for percentage deltas (none to skip)");

    std::string export_model = "toy";
    std::string export_out;
    auto* export_cmd = app.add_subcommand("export-weights", "write a model as manifest + blob");
    export_cmd->add_option("--model", export_model, "toy, scripted, or a weight manifest path");
    export_cmd->add_option("--config", decode_o.config, "config supplying model.* keys");
    export_cmd->add_option("--out", export_out, "manifest path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*decode_cmd) {
            return run_decode(decode_o, prompt);
        }
        if (*sweep_cmd) {
            return run_sweep(sweep_o);
        }
        if (*overlap_cmd) {
            return run_overlap(overlap_o, overlap_opts);
        }
        if (*gen_cmd) {
            write_task_suite(task_out, gen_tasks(parse_task_kind(kind_name), count, task_seed, gen_opts));
            std::cerr << count << " " << kind_name << " tasks written to " << task_out << "\n";
            return 0;
        }
        if (*report_cmd) {
            std::optional<Method> base;
            if (baseline != "none") {
                base = parse_method(baseline);
            }
            const SweepSummary summary = sweep_report(run_dir, base);
            std::cout << summary_markdown(summary);
            return 0;
        }
        if (*export_cmd) {
            Overrides o;
            o.config = decode_o.config;
            o.model = export_model;
            const ExperimentConfig cfg = resolve(o, false);
            save_weights(*build_model(cfg.model), export_out);
            return 0;
        }
    } catch (const glr::Error& e) {
        std::cerr << "glr: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "glr: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
