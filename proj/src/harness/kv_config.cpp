#include "glr/harness/kv_config.hpp"

#include "glr/error.hpp"
#include "glr/harness/format.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace glr {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

std::uint64_t parse_uint(const std::string& text, const std::string& what) {
    std::uint64_t value = 0;
    const char* end = text.data() + text.size();
    const auto result = std::from_chars(text.data(), end, value);
    if (text.empty() || result.ec != std::errc{} || result.ptr != end) {
        throw Error(ErrorKind::configuration, "'" + what + "': not a non-negative integer: '" + text + "'");
    }
    return value;
}

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
    KeyValueConfig cfg;
    std::string section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw Error(ErrorKind::configuration, source + ":" + std::to_string(line_no) + ": bad section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::configuration, source + ":" + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw Error(ErrorKind::configuration, source + ":" + std::to_string(line_no) + ": empty key");
        }
        if (!section.empty()) {
            key = section + "." + key;
        }
        if (cfg.entries_.count(key) != 0) {
            throw Error(ErrorKind::configuration, "'" + key + "': set twice in " + source);
        }
        cfg.entries_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::configuration, "cannot read config file " + path.string());
    }
    return parse(in, path.string());
}

const std::string* KeyValueConfig::lookup(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        return nullptr;
    }
    used_.insert(key);
    return &it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = lookup(key);
    return v ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const std::string* v = lookup(key);
    return v ? parse_double(*v, key) : fallback;
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
    const std::string* v = lookup(key);
    return v ? parse_uint(*v, key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const std::string* v = lookup(key);
    if (!v) {
        return fallback;
    }
    if (*v == "true" || *v == "1" || *v == "on") {
        return true;
    }
    if (*v == "false" || *v == "0" || *v == "off") {
        return false;
    }
    throw Error(ErrorKind::configuration, "'" + key + "': not a boolean: '" + *v + "'");
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key,
                                                  const std::vector<std::string>& fallback) const {
    const std::string* v = lookup(key);
    if (!v) {
        return fallback;
    }
    std::vector<std::string> out;
    std::istringstream parts(*v);
    for (std::string item; std::getline(parts, item, ',');) {
        item = trim(item);
        if (item.empty()) {
            throw Error(ErrorKind::configuration, "'" + key + "': empty list element");
        }
        out.push_back(item);
    }
    return out;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) {
        return fallback;
    }
    std::vector<double> out;
    for (const std::string& item : get_list(key, {})) {
        out.push_back(parse_double(item, key));
    }
    return out;
}

std::vector<std::uint64_t> KeyValueConfig::get_uints(const std::string& key,
                                                     const std::vector<std::uint64_t>& fallback) const {
    if (!has(key)) {
        return fallback;
    }
    std::vector<std::uint64_t> out;
    for (const std::string& item : get_list(key, {})) {
        out.push_back(parse_uint(item, key));
    }
    return out;
}

void KeyValueConfig::require_all_used() const {
    for (const auto& [key, value] : entries_) {
        if (used_.count(key) == 0) {
            throw Error(ErrorKind::configuration, "'" + key + "': unknown configuration key");
        }
    }
}

std::string KeyValueConfig::dump() const {
    std::ostringstream out;
    for (const auto& [key, value] : entries_) {
        out << key << " = " << value << "\n";
    }
    return out.str();
}

} // namespace glr
