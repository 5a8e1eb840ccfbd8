#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gdm/errors.hpp"

namespace gdm {

/// Flat key=value run configuration. File keys are overridden by CLI flags;
/// every key a command reads is echoed (with its resolved value) into the run
/// manifest, and keys nobody read are rejected.
class Config {
public:
    void load_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw IoError("cannot open config file: " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            std::string trimmed = trim(line);
            if (trimmed.empty() || trimmed[0] == '#') continue;
            auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
            std::string key = trim(trimmed.substr(0, eq));
            std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
            raw_[key] = value;
        }
    }

    void set(const std::string& key, const std::string& value) { raw_[key] = value; }
    bool has(const std::string& key) const { return raw_.count(key) != 0; }

    std::string str(const std::string& key, const std::string& def) const {
        consumed_.insert(key);
        auto it = raw_.find(key);
        std::string v = it != raw_.end() ? it->second : def;
        resolved_[key] = v;
        return v;
    }

    std::optional<std::string> opt_str(const std::string& key) const {
        consumed_.insert(key);
        auto it = raw_.find(key);
        if (it == raw_.end()) return std::nullopt;
        resolved_[key] = it->second;
        return it->second;
    }

    double num(const std::string& key, double def) const {
        consumed_.insert(key);
        auto it = raw_.find(key);
        if (it == raw_.end()) {
            resolved_[key] = format(def);
            return def;
        }
        resolved_[key] = it->second;
        return parse_num(key, it->second);
    }

    long integer(const std::string& key, long def) const {
        consumed_.insert(key);
        auto it = raw_.find(key);
        if (it == raw_.end()) {
            resolved_[key] = std::to_string(def);
            return def;
        }
        resolved_[key] = it->second;
        try {
            std::size_t pos = 0;
            long v = std::stol(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError("key '" + key + "': expected integer, got '" + it->second + "'");
        }
    }

    /// Throws on keys no getter touched; catches typos and stale configs.
    void check_consumed() const {
        for (const auto& [key, value] : raw_) {
            if (!consumed_.count(key))
                throw ConfigError("unknown config key '" + key + "'");
        }
    }

    /// Every key the command resolved, defaults included, minus output paths
    /// (manifests must be location independent).
    std::map<std::string, std::string> resolved_without(const std::set<std::string>& skip) const {
        std::map<std::string, std::string> out;
        for (const auto& [k, v] : resolved_)
            if (!skip.count(k)) out[k] = v;
        return out;
    }

    /// Raw keys destined for a sub-command (sweep); the receiver validates.
    std::map<std::string, std::string> passthrough(const std::set<std::string>& skip) const {
        std::map<std::string, std::string> out;
        for (const auto& [k, v] : raw_)
            if (!skip.count(k)) out[k] = v;
        return out;
    }

    static std::string format(double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

private:
    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    double parse_num(const std::string& key, const std::string& text) const {
        try {
            std::size_t pos = 0;
            double v = std::stod(text, &pos);
            if (pos != text.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError("key '" + key + "': expected number, got '" + text + "'");
        }
    }

    std::map<std::string, std::string> raw_;
    mutable std::set<std::string> consumed_;
    mutable std::map<std::string, std::string> resolved_;
};

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

} // namespace gdm
