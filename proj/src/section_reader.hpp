#pragma once
// Internal: shared primitives for the bracketed key = value file format
// used by run configs and manufactured-solution case files.

#include <array>
#include <cstdlib>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ksfv/config.hpp"  // ConfigError

namespace ksfv::ini {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

struct KeyValue {
    std::string value;
    int line = 0;
    bool used = false;
};

// section -> key -> value
using Sections = std::map<std::string, std::map<std::string, KeyValue>>;

inline Sections read_sections(std::istream& in) {
    Sections sections;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("unterminated section header", lineno);
            section = lower(trim(s.substr(1, s.size() - 2)));
            if (section.empty()) throw ConfigError("empty section name", lineno);
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", lineno);
        std::string key = lower(trim(s.substr(0, eq)));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", lineno);
        if (section.empty()) throw ConfigError("key outside any [section]", lineno);
        sections[section][key] = {value, lineno, false};
    }
    return sections;
}

inline double parse_double(const std::string& v, int line) {
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') throw ConfigError("malformed number '" + v + "'", line);
    return d;
}

inline long parse_long(const std::string& v, int line) {
    char* end = nullptr;
    long d = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("malformed integer '" + v + "'", line);
    return d;
}

inline bool parse_bool(const std::string& v, int line) {
    std::string s = lower(v);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("malformed boolean '" + v + "'", line);
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        std::string s = trim(item);
        if (!s.empty()) out.push_back(s);
    }
    return out;
}

class Reader {
public:
    explicit Reader(Sections& s) : sections_(s) {}

    KeyValue* find(const std::string& sec, const std::string& key) {
        auto it = sections_.find(sec);
        if (it == sections_.end()) return nullptr;
        auto jt = it->second.find(key);
        if (jt == it->second.end()) return nullptr;
        jt->second.used = true;
        return &jt->second;
    }

    void get(const std::string& sec, const std::string& key, double& out) {
        if (auto* kv = find(sec, key)) out = parse_double(kv->value, kv->line);
    }
    void get(const std::string& sec, const std::string& key, int& out) {
        if (auto* kv = find(sec, key)) out = static_cast<int>(parse_long(kv->value, kv->line));
    }
    void get(const std::string& sec, const std::string& key, std::uint64_t& out) {
        if (auto* kv = find(sec, key))
            out = static_cast<std::uint64_t>(parse_long(kv->value, kv->line));
    }
    void get(const std::string& sec, const std::string& key, bool& out) {
        if (auto* kv = find(sec, key)) out = parse_bool(kv->value, kv->line);
    }
    void get(const std::string& sec, const std::string& key, std::string& out) {
        if (auto* kv = find(sec, key)) out = kv->value;
    }
    void get(const std::string& sec, const std::string& key, std::vector<double>& out) {
        if (auto* kv = find(sec, key)) {
            out.clear();
            for (const auto& item : split_list(kv->value))
                out.push_back(parse_double(item, kv->line));
        }
    }
    void get(const std::string& sec, const std::string& key, std::vector<int>& out) {
        if (auto* kv = find(sec, key)) {
            out.clear();
            for (const auto& item : split_list(kv->value))
                out.push_back(static_cast<int>(parse_long(item, kv->line)));
        }
    }
    void get_axes(const std::string& sec, const std::string& key, std::array<double, 3>& out,
                  int dim) {
        if (auto* kv = find(sec, key)) {
            auto items = split_list(kv->value);
            if (items.size() != 1 && static_cast<int>(items.size()) != dim)
                throw ConfigError("expected 1 or dim values for '" + key + "'", kv->line);
            for (int a = 0; a < dim; ++a)
                out[static_cast<std::size_t>(a)] = parse_double(
                    items[items.size() == 1 ? 0 : static_cast<std::size_t>(a)], kv->line);
        }
    }

    void reject_unused() const {
        for (const auto& [sec, keys] : sections_)
            for (const auto& [key, kv] : keys)
                if (!kv.used)
                    throw ConfigError("unknown key '" + sec + "." + key + "'", kv.line);
    }

private:
    Sections& sections_;
};

}  // namespace ksfv::ini
