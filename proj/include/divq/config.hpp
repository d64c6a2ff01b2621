#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "divq/errors.hpp"

namespace divq {

// Flat plain-text configuration:
//
//   # comment (also ;)
//   [section]
//   key = value
//
// Keys are stored as "section.key". Values keep their raw text; typed
// accessors parse on demand. Serialization is canonical (sorted keys), so
// parse -> serialize -> parse is the identity on the map.
using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline KeyValues parse_config_text(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw parse_error("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw parse_error("config line " + std::to_string(line_no) +
                                  ": empty section name");
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw parse_error("config line " + std::to_string(line_no) +
                              ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw parse_error("config line " + std::to_string(line_no) + ": empty key");
        kv[section.empty() ? key : section + "." + key] = value;
    }
    return kv;
}

inline KeyValues parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

inline std::string serialize_config(const KeyValues& kv) {
    std::string out;
    std::string current_section;
    bool first = true;
    for (const auto& [full_key, value] : kv) {
        const std::size_t dot = full_key.find('.');
        const std::string section = dot == std::string::npos ? "" : full_key.substr(0, dot);
        const std::string key = dot == std::string::npos ? full_key : full_key.substr(dot + 1);
        if (section != current_section || first) {
            if (!first) out += "\n";
            if (!section.empty()) out += "[" + section + "]\n";
            current_section = section;
        }
        out += key + " = " + value + "\n";
        first = false;
    }
    return out;
}

// --- typed access ---

inline bool config_has(const KeyValues& kv, const std::string& key) {
    return kv.find(key) != kv.end();
}

inline std::string config_get(const KeyValues& kv, const std::string& key,
                              const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

inline double config_get_double(const KeyValues& kv, const std::string& key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw parse_error("");
        return v;
    } catch (const std::exception&) {
        throw parse_error("config: key '" + key + "' has non-numeric value '" + it->second + "'");
    }
}

inline long config_get_long(const KeyValues& kv, const std::string& key, long fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t pos = 0;
        const long v = std::stol(it->second, &pos);
        if (pos != it->second.size()) throw parse_error("");
        return v;
    } catch (const std::exception&) {
        throw parse_error("config: key '" + key + "' has non-integer value '" + it->second + "'");
    }
}

inline bool config_get_bool(const KeyValues& kv, const std::string& key, bool fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw parse_error("config: key '" + key + "' has non-boolean value '" + it->second + "'");
}

// Whitespace-separated list values, e.g. "seeds = 1 2 3".
inline std::vector<std::string> config_get_list(const KeyValues& kv, const std::string& key) {
    std::vector<std::string> out;
    auto it = kv.find(key);
    if (it == kv.end()) return out;
    std::istringstream ss(it->second);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

}  // namespace divq
