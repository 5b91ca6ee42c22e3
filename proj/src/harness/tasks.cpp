#include "glr/harness/tasks.hpp"

#include "glr/error.hpp"
#include "glr/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>

namespace glr {

namespace {

SparseDist one_hot(TokenId id) { return {{id, 1.0}}; }

SparseDist mostly(TokenId right, TokenId wrong, double p_right) { return {{right, p_right}, {wrong, 1.0 - p_right}}; }

TokenId symbol(std::uint64_t i) { return kFirstSymbol + static_cast<TokenId>(i % kSymbolCount); }

TokenId digit(std::uint64_t v) {
    if (v >= kSeparatorToken) {
        throw Error(ErrorKind::invalid_parameter, "digit tokens only cover values 0..9");
    }
    return static_cast<TokenId>(v);
}

} // namespace

std::string_view to_string(TaskKind kind) noexcept {
    switch (kind) {
    case TaskKind::copy: return "copy";
    case TaskKind::modular_chain: return "modular_chain";
    case TaskKind::forced_branch: return "forced_branch";
    }
    return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
    for (TaskKind k : {TaskKind::copy, TaskKind::modular_chain, TaskKind::forced_branch}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw Error(ErrorKind::invalid_parameter, "unknown task kind '" + std::string(name) + "'");
}

TokenId ScriptedTask::max_token() const {
    TokenId m = 0;
    for (TokenId t : prompt) {
        m = std::max(m, t);
    }
    for (TokenId t : gold) {
        m = std::max(m, t);
    }
    for (const auto& [step, dist] : forced) {
        for (const auto& [id, p] : dist) {
            m = std::max(m, id);
        }
    }
    return m;
}

ForcedTable ScriptedTask::forced_table(std::size_t vocab) const {
    if (max_token() >= vocab) {
        throw Error(ErrorKind::invalid_input, "task uses token " + std::to_string(max_token()) +
                                                  " outside a vocabulary of " + std::to_string(vocab));
    }
    ForcedTable table;
    for (const auto& [step, sparse] : forced) {
        std::vector<double> dense(vocab, 0.0);
        for (const auto& [id, p] : sparse) {
            dense[id] += p;
        }
        table.emplace(prompt.size() + step, ProbDist(std::move(dense)));
    }
    return table;
}

// separator, echo of the prompt (each symbol 0.9 right / 0.1 a neighbour), eos
ScriptedTask make_copy_task(std::vector<TokenId> prompt) {
    if (prompt.empty()) {
        throw Error(ErrorKind::invalid_parameter, "copy prompt must not be empty");
    }
    ScriptedTask task;
    task.kind = TaskKind::copy;
    task.gold = prompt;
    std::size_t step = 0;
    task.forced[step++] = one_hot(kSeparatorToken);
    for (TokenId id : prompt) {
        const TokenId wrong = id >= kFirstSymbol ? symbol(id - kFirstSymbol + 1) : kFirstSymbol;
        task.forced[step++] = mostly(id, wrong, 0.9);
    }
    task.forced[step++] = one_hot(kEosToken);
    task.prompt = std::move(prompt);
    return task;
}

// running sums mod M as reasoning, then separator, final sum, eos
ScriptedTask make_modular_chain_task(const std::vector<std::uint64_t>& operands, std::uint64_t modulus) {
    if (operands.empty()) {
        throw Error(ErrorKind::invalid_parameter, "modular chain needs at least one operand");
    }
    if (modulus < 2 || modulus > 10) {
        throw Error(ErrorKind::invalid_parameter, "modulus must lie in [2, 10] to fit digit tokens");
    }
    ScriptedTask task;
    task.kind = TaskKind::modular_chain;
    std::uint64_t sum = 0;
    std::size_t step = 0;
    for (std::uint64_t v : operands) {
        task.prompt.push_back(digit(v % modulus));
        sum = (sum + v) % modulus;
        task.forced[step++] = mostly(digit(sum), digit((sum + 1) % modulus), 0.85);
    }
    task.forced[step++] = one_hot(kSeparatorToken);
    task.forced[step++] = mostly(digit(sum), digit((sum + 1) % modulus), 0.75);
    task.forced[step++] = one_hot(kEosToken);
    task.gold = {digit(sum)};
    return task;
}

// one-hot reasoning with a single uniform step, then separator, answer, eos
ScriptedTask make_forced_branch_task(std::vector<TokenId> prompt, std::size_t branch_step,
                                     std::vector<TokenId> reasoning, std::vector<TokenId> branch, TokenId answer) {
    if (branch.size() < 2) {
        throw Error(ErrorKind::invalid_parameter, "branch needs at least two continuations");
    }
    if (branch_step >= reasoning.size()) {
        throw Error(ErrorKind::invalid_parameter, "branch step outside the reasoning span");
    }
    ScriptedTask task;
    task.kind = TaskKind::forced_branch;
    task.prompt = std::move(prompt);
    std::size_t step = 0;
    for (std::size_t i = 0; i < reasoning.size(); ++i) {
        if (i == branch_step) {
            SparseDist uniform;
            for (TokenId id : branch) {
                uniform.emplace_back(id, 1.0 / static_cast<double>(branch.size()));
            }
            task.forced[step++] = std::move(uniform);
        } else {
            task.forced[step++] = one_hot(reasoning[i]);
        }
    }
    task.forced[step++] = one_hot(kSeparatorToken);
    task.forced[step++] = one_hot(answer);
    task.forced[step++] = one_hot(kEosToken);
    task.gold = {answer};
    return task;
}

std::vector<ScriptedTask> gen_tasks(TaskKind kind, std::size_t count, std::uint64_t seed,
                                    const TaskGenOptions& options) {
    if (count < 1) {
        throw Error(ErrorKind::invalid_parameter, "task count must be >= 1");
    }
    if (options.branch_width < 2 || options.branch_width > kSymbolCount) {
        throw Error(ErrorKind::invalid_parameter, "branch width must lie in [2, 32]");
    }
    if (options.reasoning_steps < 1) {
        throw Error(ErrorKind::invalid_parameter, "reasoning_steps must be >= 1");
    }
    Rng rng(seed);
    std::vector<ScriptedTask> tasks;
    tasks.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        switch (kind) {
        case TaskKind::copy: {
            std::vector<TokenId> prompt(2 + rng.below(4));
            for (TokenId& t : prompt) {
                t = symbol(rng.below(kSymbolCount));
            }
            tasks.push_back(make_copy_task(std::move(prompt)));
            break;
        }
        case TaskKind::modular_chain: {
            std::vector<std::uint64_t> operands(2 + rng.below(3));
            for (auto& v : operands) {
                v = rng.below(options.modulus);
            }
            tasks.push_back(make_modular_chain_task(operands, options.modulus));
            break;
        }
        case TaskKind::forced_branch: {
            std::vector<TokenId> prompt(3);
            for (TokenId& t : prompt) {
                t = symbol(rng.below(kSymbolCount));
            }
            std::vector<TokenId> reasoning(options.reasoning_steps);
            for (TokenId& t : reasoning) {
                t = symbol(rng.below(kSymbolCount));
            }
            const std::size_t branch_step = rng.below(options.reasoning_steps);
            const std::uint64_t base = rng.below(kSymbolCount);
            std::vector<TokenId> branch(options.branch_width);
            for (std::size_t i = 0; i < branch.size(); ++i) {
                branch[i] = symbol(base + i);
            }
            const TokenId answer = symbol(rng.below(kSymbolCount));
            tasks.push_back(make_forced_branch_task(std::move(prompt), branch_step, std::move(reasoning),
                                                    std::move(branch), answer));
            break;
        }
        }
    }
    return tasks;
}

void write_task_suite(const std::filesystem::path& path, const std::vector<ScriptedTask>& tasks) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::io, "cannot write task suite " + path.string());
    }
    for (const ScriptedTask& task : tasks) {
        nlohmann::ordered_json j;
        j["kind"] = to_string(task.kind);
        j["prompt"] = task.prompt;
        j["gold"] = task.gold;
        auto forced = nlohmann::ordered_json::array();
        for (const auto& [step, dist] : task.forced) {
            auto entries = nlohmann::ordered_json::array();
            for (const auto& [id, p] : dist) {
                entries.push_back(nlohmann::ordered_json::array({id, p}));
            }
            forced.push_back(nlohmann::ordered_json::array({step, std::move(entries)}));
        }
        j["forced"] = std::move(forced);
        out << j.dump() << '\n';
    }
}

std::vector<ScriptedTask> read_task_suite(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::configuration, "'task_suite': cannot read " + path.string());
    }
    std::vector<ScriptedTask> tasks;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            ScriptedTask task;
            task.kind = parse_task_kind(j.at("kind").get<std::string>());
            task.prompt = j.at("prompt").get<std::vector<TokenId>>();
            task.gold = j.at("gold").get<std::vector<TokenId>>();
            for (const auto& entry : j.at("forced")) {
                SparseDist dist;
                for (const auto& pair : entry.at(1)) {
                    dist.emplace_back(pair.at(0).get<TokenId>(), pair.at(1).get<double>());
                }
                double mass = 0.0;
                for (const auto& [id, p] : dist) {
                    if (p < 0.0) {
                        throw Error(ErrorKind::format, "negative forced probability");
                    }
                    mass += p;
                }
                if (std::abs(mass - 1.0) > ProbDist::kSumTolerance) {
                    throw Error(ErrorKind::format, "forced distribution does not sum to 1");
                }
                task.forced[entry.at(0).get<std::size_t>()] = std::move(dist);
            }
            if (task.gold.empty()) {
                throw Error(ErrorKind::format, "gold answer is empty");
            }
            tasks.push_back(std::move(task));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::format,
                        path.string() + ":" + std::to_string(line_no) + ": malformed task: " + e.what());
        } catch (const Error& e) {
            throw Error(e.kind(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (tasks.empty()) {
        throw Error(ErrorKind::empty_input, "task suite " + path.string() + " has no tasks");
    }
    return tasks;
}

} // namespace glr
