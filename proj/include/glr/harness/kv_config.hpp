#pragma once

/**
 * Flat key-value configuration text.
 *
 *   # comment
 *   task_suite = tasks.jsonl
 *   [decode]            # following keys are read as decode.<key>
 *   tau = 0.5
 *   sweep.tau = 0.3, 0.4, 0.5
 *
 * Lists are comma separated. Every key read through a getter is marked as
 * used so callers can reject typos with require_all_used().
 */

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace glr {

class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>");
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<std::uint64_t> get_uints(const std::string& key, const std::vector<std::uint64_t>& fallback) const;

    /// Throws a configuration error naming the first key nobody read.
    void require_all_used() const;

    /// Sorted `key = value` lines.
    std::string dump() const;

    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

private:
    const std::string* lookup(const std::string& key) const;

    std::map<std::string, std::string> entries_;
    mutable std::set<std::string> used_;
};

std::uint64_t parse_uint(const std::string& text, const std::string& what);

} // namespace glr
