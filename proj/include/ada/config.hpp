#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ada {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat "section.key = value" text format; '#' starts a comment.
class Config {
public:
    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open " + path);
        Config cfg;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config: missing '=' at " + path + ":" +
                                  std::to_string(lineno));
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string val = trim(trimmed.substr(eq + 1));
            if (key.empty()) throw ConfigError("config: empty key at line " +
                                               std::to_string(lineno));
            cfg.kv_[key] = val;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string get_str(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError("config: missing key '" + key + "'");
        return it->second;
    }

    std::string get_str(const std::string& key, const std::string& def) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? def : it->second;
    }

    long long get_int(const std::string& key) const { return parse_int(key, get_str(key)); }
    long long get_int(const std::string& key, long long def) const {
        return has(key) ? get_int(key) : def;
    }

    double get_double(const std::string& key) const { return parse_double(key, get_str(key)); }
    double get_double(const std::string& key, double def) const {
        return has(key) ? get_double(key) : def;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t def) const {
        if (!has(key)) return def;
        const long long v = get_int(key);
        if (v < 0) throw ConfigError("config: key '" + key + "' must be non-negative");
        return static_cast<std::uint64_t>(v);
    }

    void set(const std::string& key, const std::string& val) { kv_[key] = val; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static long long parse_int(const std::string& key, const std::string& v) {
        std::size_t pos = 0;
        long long out = 0;
        try {
            out = std::stoll(v, &pos);
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' is not an integer: " + v);
        }
        if (pos != v.size())
            throw ConfigError("config: key '" + key + "' is not an integer: " + v);
        return out;
    }

    static double parse_double(const std::string& key, const std::string& v) {
        std::size_t pos = 0;
        double out = 0;
        try {
            out = std::stod(v, &pos);
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' is not a number: " + v);
        }
        if (pos != v.size())
            throw ConfigError("config: key '" + key + "' is not a number: " + v);
        return out;
    }

    std::map<std::string, std::string> kv_;
};

}  // namespace ada
