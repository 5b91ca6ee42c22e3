#pragma once

/**
 * Synthetic task suites.
 *
 * Token layout shared by every generator:
 *   0..9    digits (token id == digit value)
 *   10      answer separator
 *   11      end of sequence
 *   12..43  content symbols
 *
 * Each task carries a forced next-token table keyed by generation step
 * (step 0 is the distribution right after the prompt). The scripted model
 * replays that table, so suites exercise the controllers at known steps.
 */

#include "glr/core.hpp"
#include "glr/scripted_model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace glr {

inline constexpr TokenId kSeparatorToken = 10;
inline constexpr TokenId kEosToken = 11;
inline constexpr TokenId kFirstSymbol = 12;
inline constexpr std::size_t kSymbolCount = 32;

enum class TaskKind { copy, modular_chain, forced_branch };
std::string_view to_string(TaskKind kind) noexcept;
TaskKind parse_task_kind(std::string_view name);

using SparseDist = std::vector<std::pair<TokenId, double>>;

struct ScriptedTask {
    TaskKind kind = TaskKind::copy;
    std::vector<TokenId> prompt;
    std::map<std::size_t, SparseDist> forced; ///< generation step -> distribution
    std::vector<TokenId> gold;

    /// Number of forced generation steps (the scripted run length).
    std::size_t forced_steps() const noexcept { return forced.size(); }
    /// Largest token id mentioned anywhere in the task.
    TokenId max_token() const;
    /// Forced table keyed by absolute position, densified to `vocab`.
    ForcedTable forced_table(std::size_t vocab) const;
};

struct TaskGenOptions {
    std::uint64_t modulus = 10;
    std::size_t branch_width = 2;
    std::size_t reasoning_steps = 6; ///< forced_branch: steps before the separator
};

ScriptedTask make_copy_task(std::vector<TokenId> prompt);
ScriptedTask make_modular_chain_task(const std::vector<std::uint64_t>& operands, std::uint64_t modulus);
ScriptedTask make_forced_branch_task(std::vector<TokenId> prompt, std::size_t branch_step,
                                     std::vector<TokenId> reasoning, std::vector<TokenId> branch,
                                     TokenId answer);

std::vector<ScriptedTask> gen_tasks(TaskKind kind, std::size_t count, std::uint64_t seed,
                                    const TaskGenOptions& options = {});

void write_task_suite(const std::filesystem::path& path, const std::vector<ScriptedTask>& tasks);
std::vector<ScriptedTask> read_task_suite(const std::filesystem::path& path);

} // namespace glr
