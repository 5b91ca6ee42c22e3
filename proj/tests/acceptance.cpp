// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                 run all criteria
//   acceptance --write-golden  regenerate tests/data/golden_trace_v1.jsonl

#include "glr/analysis.hpp"
#include "glr/decode.hpp"
#include "glr/error.hpp"
#include "glr/harness/experiment.hpp"
#include "glr/harness/tasks.hpp"
#include "glr/latent.hpp"
#include "glr/scripted_model.hpp"
#include "glr/toy_transformer.hpp"
#include "glr/trace_io.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace glr;
namespace fs = std::filesystem;

namespace {

const fs::path kGolden = fs::path(GLR_TEST_DATA_DIR) / "golden_trace_v1.jsonl";

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome ok(std::string detail) { return {true, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, std::move(detail)}; }

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

fs::path scratch(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("glr_accept_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<double> random_vector(Rng& rng, std::size_t n, double scale) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = scale * rng.normal();
    }
    return v;
}

double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

// 1. selar(tau=1) == cot_sampling, selar(tau=0, no reg) == soft_thinking, cot_sampling(top_k=1) == cot_greedy.
Outcome reduction_ladder() {
    const ToyTransformer model(ToyTransformerConfig{});
    Rng rng(1);
    double worst_embedding = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
        std::vector<TokenId> prompt(2 + rng.below(8));
        for (TokenId& t : prompt) {
            t = static_cast<TokenId>(rng.below(model.vocab_size()));
        }
        DecodeConfig base;
        base.seed = 1000 + i;
        base.max_steps = 20;

        DecodeConfig selar1 = base;
        selar1.tau = 1.0;
        DecodeConfig cot = base;
        cot.method = Method::cot_sampling;
        if (decode(model, prompt, selar1).tokens != decode(model, prompt, cot).tokens) {
            return fail("prompt " + std::to_string(i) + ": selar(tau=1) tokens differ from cot_sampling");
        }

        DecodeConfig selar0 = base;
        selar0.tau = 0.0;
        selar0.regularization.enabled = false;
        DecodeConfig soft = base;
        soft.method = Method::soft_thinking;
        const Transcript a = decode(model, prompt, selar0);
        const Transcript b = decode(model, prompt, soft);
        if (a.tokens != b.tokens || a.inputs.size() != b.inputs.size()) {
            return fail("prompt " + std::to_string(i) + ": selar(tau=0) transcript differs from soft_thinking");
        }
        for (std::size_t t = 0; t < a.inputs.size(); ++t) {
            for (std::size_t j = 0; j < a.inputs[t].size(); ++j) {
                worst_embedding = std::max(worst_embedding, std::abs(a.inputs[t][j] - b.inputs[t][j]));
            }
        }
        if (worst_embedding > 1e-6) {
            return fail("prompt " + std::to_string(i) + ": embedding gap " + num(worst_embedding));
        }

        DecodeConfig k1 = cot;
        k1.sampler.top_k = 1;
        DecodeConfig greedy = base;
        greedy.method = Method::cot_greedy;
        if (decode(model, prompt, k1).tokens != decode(model, prompt, greedy).tokens) {
            return fail("prompt " + std::to_string(i) + ": cot_sampling(top_k=1) differs from cot_greedy");
        }
    }
    return ok("50 prompts, max embedding gap " + num(worst_embedding));
}

// 2. Regularized embedding against its epsilon -> 0 limit, plus the repulsion sign.
Outcome contrastive_closed_form() {
    const RegularizationConfig cfg;
    Rng rng(2);
    double worst_slack = HUGE_VAL;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t d = 1 + rng.below(64);
        const auto e = random_vector(rng, d, 2.0 * rng.uniform() + 0.01);
        const auto star = random_vector(rng, d, 2.0 * rng.uniform() + 0.01);
        const double h = rng.uniform();
        const auto out = contrastive_regularize(e, star, h, cfg);
        std::vector<double> delta(d), gap(d), moved(d);
        double repulsion = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            delta[j] = e[j] - star[j];
            gap[j] = out[j] - ((1.0 + h) * e[j] - h * star[j]);
            moved[j] = out[j] - e[j];
            repulsion += moved[j] * delta[j];
        }
        const double dn = l2(delta);
        const double bound = h * dn * cfg.epsilon / (dn + cfg.epsilon) + 1e-9;
        if (l2(gap) > bound) {
            return fail("draw " + std::to_string(i) + ": gap " + num(l2(gap)) + " > bound " + num(bound));
        }
        if (repulsion < 0.0) {
            return fail("draw " + std::to_string(i) + ": correction points toward the dominant embedding");
        }
        worst_slack = std::min(worst_slack, bound - l2(gap));
    }
    return ok("1000 draws, smallest slack " + num(worst_slack));
}

// 3. Forced-branch suites: one-hot steps read 0, uniform-over-k steps read 1, activation is the forced fraction.
Outcome gate_exactness() {
    const ScriptedModel base = ScriptedModel::seeded({});
    std::size_t checked = 0;
    for (std::size_t width : {2, 3}) {
        TaskGenOptions opts;
        opts.branch_width = width;
        const auto tasks = gen_tasks(TaskKind::forced_branch, 40, 30 + width, opts);
        for (double tau : {0.0, 0.5, 0.99}) {
            std::size_t total = 0;
            std::size_t uniform_steps = 0;
            std::vector<Transcript> runs;
            for (std::size_t i = 0; i < tasks.size(); ++i) {
                DecodeConfig cfg;
                cfg.tau = tau;
                cfg.gate_k = width;
                cfg.seed = mix_seed(7, i);
                const ScriptedModel m = base.with_forced(tasks[i].forced_table(base.vocab_size()));
                runs.push_back(decode(m, tasks[i].prompt, cfg));
                const Transcript& tr = runs.back();
                if (tr.steps.size() != tasks[i].forced_steps()) {
                    return fail("task " + std::to_string(i) + " ran " + std::to_string(tr.steps.size()) + " steps");
                }
                for (const StepTrace& st : tr.steps) {
                    const bool is_uniform = tasks[i].forced.at(st.step).size() == width;
                    const double h = st.gate.reading.normalized;
                    if (is_uniform ? std::abs(h - 1.0) > 1e-9 : h != 0.0) {
                        return fail("width " + std::to_string(width) + ": step " + std::to_string(st.step) +
                                    " reads " + num(h));
                    }
                    uniform_steps += is_uniform ? 1 : 0;
                    ++total;
                }
            }
            const double expected = static_cast<double>(uniform_steps) / static_cast<double>(total);
            const double got = activation_frequency(runs);
            if (got != expected) {
                return fail("width " + std::to_string(width) + " tau " + num(tau) + ": activation " + num(got) +
                            " vs " + num(expected));
            }
            checked += total;
        }
    }
    return ok(std::to_string(checked) + " steps, activation equals forced fraction exactly");
}

// 4. Scripted linear model: mixture input gives the probability-mixture of per-token logits.
Outcome linearity_oracle() {
    const ScriptedModel model = ScriptedModel::seeded({});
    // Oracle computes W e + b straight from the exported tensors.
    const WeightBundle w = model.export_weights();
    std::map<std::string, const NamedTensor*> by_name;
    for (const NamedTensor& t : w.tensors) {
        by_name[t.name] = &t;
    }
    const auto& E = by_name.at("token_embed")->data;
    const auto& W = by_name.at("proj.weight")->data;
    const auto& B = by_name.at("proj.bias")->data;
    const std::size_t V = model.vocab_size();
    const std::size_t d = model.dim();
    auto token_logits = [&](std::size_t v) {
        std::vector<double> out(V);
        for (std::size_t r = 0; r < V; ++r) {
            double s = B[r];
            for (std::size_t j = 0; j < d; ++j) {
                s += static_cast<double>(W[r * d + j]) * static_cast<double>(E[v * d + j]);
            }
            out[r] = s;
        }
        return out;
    };

    Rng rng(4);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + rng.below(6);
        std::vector<double> weights(V);
        double total = 0.0;
        for (double& x : weights) {
            x = rng.uniform();
            total += x;
        }
        for (double& x : weights) {
            x /= total;
        }
        const TopKCandidates c = topk_renormalize(ProbDist(weights), k);
        const EmbeddingVector mix = soft_embedding(c, model.embeddings());
        ModelState state = model.init_state(std::vector<TokenId>{static_cast<TokenId>(rng.below(V))});
        const Logits got = model.step(state, mix).logits;
        std::vector<double> expected(V, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            const auto single = token_logits(c.tokens()[i]);
            for (std::size_t r = 0; r < V; ++r) {
                expected[r] += c.probs()[i] * single[r];
            }
        }
        for (std::size_t r = 0; r < V; ++r) {
            worst = std::max(worst, std::abs(got[r] - expected[r]));
        }
    }
    if (worst > 1e-6) {
        return fail("max logit gap " + num(worst));
    }
    return ok("100 mixtures, max logit gap " + num(worst));
}

// 5. Final-layer lens top-1 equals the output top-1; a collapsed mixture overlaps its own reference fully.
Outcome lens_consistency() {
    const ToyTransformer model(ToyTransformerConfig{});
    Rng rng(5);
    ModelState state = model.init_state(std::vector<TokenId>{1, 2, 3});
    for (int i = 0; i < 100; ++i) {
        std::vector<double> input = random_vector(rng, model.dim(), 1.0);
        if (i % 2 == 0) {
            const auto row = model.embeddings().row(static_cast<TokenId>(rng.below(model.vocab_size())));
            input.assign(row.begin(), row.end());
        }
        const StepOutput out = model.step(state, input);
        const Logits lens = model.logit_lens(out.activations.hidden.back(), model.layer_count() - 1);
        if (lens.argmax() != out.logits.argmax()) {
            return fail("step " + std::to_string(i) + ": lens top-1 differs from output top-1");
        }
    }

    std::vector<Transcript> runs;
    for (std::uint64_t s = 0; s < 8; ++s) {
        DecodeConfig cfg;
        cfg.seed = s;
        cfg.max_steps = 24;
        runs.push_back(decode(model, std::vector<TokenId>{static_cast<TokenId>(20 + s), 5, 9}, cfg));
    }
    const auto branching = detect_branching_steps(runs, 0.5);
    if (branching.empty()) {
        return fail("no branching steps in the toy transcripts");
    }
    OverlapOptions opts;
    opts.mixture_k = 1;
    const OverlapResult r = overlap_profile(model, runs, branching, opts);
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        if (r.raw.top1_mean[l] != 1.0 || r.regularized.top1_mean[l] != 1.0) {
            return fail("layer " + std::to_string(l) + ": O_top1 = " + num(r.raw.top1_mean[l]));
        }
    }
    return ok("100 steps; O_top1 = 1 at all " + std::to_string(model.layer_count()) + " layers over " +
              std::to_string(r.raw.n) + " branching steps");
}

// 6. Two steps, three layers, lens sets of size 4 written out by hand.
Outcome overlap_oracle() {
    using Sets = std::vector<std::vector<TokenId>>;
    const std::size_t k = 4;
    const LensSnapshot soft{Sets{{1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}}};
    const LensSnapshot top1_a{Sets{{1, 2, 3, 4}, {1, 2, 3, 9}, {9, 10, 11, 12}}};
    const LensSnapshot top2_a{Sets{{5, 6, 7, 8}, {4, 10, 11, 12}, {1, 2, 9, 10}}};
    const LensSnapshot top1_b{Sets{{1, 2, 9, 10}, {1, 9, 10, 11}, {4, 3, 2, 1}}};
    const LensSnapshot top2_b{Sets{{3, 11, 12, 13}, {4, 3, 2, 1}, {1, 2, 3, 4}}};
    const std::vector<StepOverlap> steps{step_overlap(soft, top1_a, top2_a, k), step_overlap(soft, top1_b, top2_b, k)};
    const OverlapProfile p = aggregate_overlaps(steps);

    // Per-step overlaps counted by hand, then mean and SE = |a - b| / 2 for two samples.
    const double o1[2][3] = {{1.0, 0.75, 0.0}, {0.5, 0.25, 1.0}};
    const double o2[2][3] = {{0.0, 0.25, 0.5}, {0.25, 1.0, 1.0}};
    const double mean1[3] = {0.75, 0.5, 0.5};
    const double mean2[3] = {0.125, 0.625, 0.75};
    const double se1[3] = {0.25, 0.25, 0.5};
    const double se2[3] = {0.125, 0.375, 0.25};
    double worst = 0.0;
    for (std::size_t l = 0; l < 3; ++l) {
        for (std::size_t s = 0; s < 2; ++s) {
            worst = std::max({worst, std::abs(steps[s].top1[l] - o1[s][l]), std::abs(steps[s].top2[l] - o2[s][l])});
        }
        worst = std::max({worst, std::abs(p.top1_mean[l] - mean1[l]), std::abs(p.top2_mean[l] - mean2[l]),
                          std::abs(p.top1_se[l] - se1[l]), std::abs(p.top2_se[l] - se2[l])});
    }
    if (p.n != 2 || worst > 1e-12) {
        return fail("max deviation " + num(worst));
    }
    return ok("max deviation " + num(worst));
}

// 7. Tokens per correct answer.
Outcome tpca_table() {
    struct Row {
        double alpha, tc, tw, expected, tol;
    };
    const Row rows[] = {{0.6, 100.0, 200.0, 233.33, 0.01}, {1.0, 80.0, 500.0, 80.0, 0.0}, {1.0, 3.5, 0.0, 3.5, 0.0}};
    for (const Row& r : rows) {
        const double got = tpca(r.alpha, r.tc, r.tw);
        if (std::abs(got - r.expected) > r.tol) {
            return fail("alpha " + num(r.alpha) + ": " + num(got));
        }
    }
    try {
        tpca(0.0, 100.0, 200.0);
        return fail("alpha = 0 did not raise");
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::undefined_metric) {
            return fail("alpha = 0 raised the wrong kind");
        }
    }
    return ok("233.33, T_c at alpha = 1, undefined-metric at alpha = 0");
}

// 8. Appendix-shaped sweep: row count and byte-for-byte replay from the manifest.
Outcome sweep_mechanics() {
    const fs::path dir = scratch("sweep");
    write_task_suite(dir / "tasks.jsonl", gen_tasks(TaskKind::modular_chain, 30, 8));
    ExperimentConfig cfg;
    cfg.model.kind = "scripted";
    cfg.task_suite = (dir / "tasks.jsonl").string();
    cfg.seeds = {1, 2, 3};
    const std::size_t predicted = cfg.methods.size() * (cfg.tau_grid.size() + cfg.k_grid.size() - 1) * cfg.seeds.size();

    const auto first = run_experiment(cfg, dir / "a");
    const std::string report = slurp(dir / "a" / "report.csv");
    const auto rows = static_cast<std::size_t>(std::count(report.begin(), report.end(), '\n')) - 1;
    if (first.size() != predicted || rows != predicted) {
        return fail(std::to_string(rows) + " rows, predicted " + std::to_string(predicted));
    }

    run_experiment(ExperimentConfig::load(dir / "a" / "manifest.txt"), dir / "b");
    std::size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const fs::path rel = fs::relative(entry.path(), dir / "a");
        if (slurp(entry.path()) != slurp(dir / "b" / rel)) {
            return fail("replay differs in " + rel.string());
        }
        ++files;
    }
    std::size_t replay_files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir / "b")) {
        replay_files += entry.is_regular_file() ? 1 : 0;
    }
    fs::remove_all(dir);
    if (files != replay_files) {
        return fail("replay wrote " + std::to_string(replay_files) + " files, original " + std::to_string(files));
    }
    return ok(std::to_string(rows) + " rows; " + std::to_string(files) + " files replay byte-for-byte");
}

std::string golden_trace() {
    ToyTransformerConfig model_cfg;
    model_cfg.seed = 42;
    const ToyTransformer model(model_cfg);
    DecodeConfig cfg;
    cfg.seed = 42;
    cfg.tau = 0.5;
    cfg.gate_k = 3;
    cfg.max_steps = 32;
    const Transcript tr = decode(model, std::vector<TokenId>{1, 2, 3, 4, 5, 6, 7, 8}, cfg);
    std::ostringstream out;
    write_trace_jsonl(out, tr);
    return out.str();
}

// 9. Committed golden trace reproduced byte-for-byte.
Outcome golden_stability() {
    if (!fs::exists(kGolden)) {
        return fail("missing " + kGolden.string() + " (run with --write-golden)");
    }
    const std::string expected = slurp(kGolden);
    const std::string got = golden_trace();
    if (got != expected) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min(got.size(), expected.size()) && got[i] == expected[i]; ++i) {
            line += got[i] == '\n' ? 1 : 0;
        }
        return fail("trace differs from golden at line " + std::to_string(line));
    }
    const auto lines = std::count(got.begin(), got.end(), '\n');
    return ok(std::to_string(lines) + " lines identical");
}

} // namespace

int main(int argc, char** argv) {
    if (argc > 1 && std::strcmp(argv[1], "--write-golden") == 0) {
        std::ofstream(kGolden, std::ios::binary) << golden_trace();
        std::printf("wrote %s\n", kGolden.string().c_str());
        return 0;
    }

    struct Criterion {
        int id;
        const char* name;
        double budget_s; ///< 0: no runtime bound
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {1, "reduction ladder", 10.0, reduction_ladder},
        {2, "contrastive closed form", 1.0, contrastive_closed_form},
        {3, "entropy gate exactness", 0.0, gate_exactness},
        {4, "linearity oracle", 0.0, linearity_oracle},
        {5, "logit-lens consistency", 0.0, lens_consistency},
        {6, "overlap protocol oracle", 0.0, overlap_oracle},
        {7, "TPCA", 1.0, tpca_table},
        {8, "sensitivity-sweep mechanics", 60.0, sweep_mechanics},
        {9, "trace-format stability", 0.0, golden_stability},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = fail(std::string("threw: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_s > 0.0 && seconds > c.budget_s) {
            outcome.pass = false;
            outcome.detail += "; over the " + num(c.budget_s) + " s budget";
        }
        failures += outcome.pass ? 0 : 1;
        std::printf("%s  %d  %-28s %.3fs  %s\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name, seconds,
                    outcome.detail.c_str());
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
    return failures == 0 ? 0 : 1;
}
