#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "law.hpp"

namespace pinrenew {

// One key = value line of a plain-text configuration. The line number rides
// along so every complaint about a value can point back at its source.
struct ConfigEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

namespace cfgdetail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') return false;
    return true;
}

} // namespace cfgdetail

// Parsed configuration: ordered key = value pairs plus a source label for
// diagnostics. Values stay strings until a typed getter asks for them, so
// the original text can be echoed losslessly into reports.
struct Config {
    std::vector<ConfigEntry> entries;
    std::string source = "<config>";

    const ConfigEntry* find(const std::string& key) const {
        for (const auto& e : entries)
            if (e.key == key) return &e;
        return nullptr;
    }
    bool has(const std::string& key) const { return find(key) != nullptr; }

    std::string where(const ConfigEntry& e) const {
        // Entries folded in from command-line flags carry no line number.
        if (e.line == 0) return source;
        return source + ":" + std::to_string(e.line);
    }
    [[noreturn]] void fail(const ConfigEntry& e, const std::string& what) const {
        throw error("invalid-input", where(e) + ": key '" + e.key + "': " + what);
    }
    [[noreturn]] void missing(const std::string& key) const {
        throw error("invalid-input", source + ": missing required key '" + key + "'");
    }

    const ConfigEntry& require(const std::string& key) const {
        const ConfigEntry* e = find(key);
        if (!e) missing(key);
        return *e;
    }

    std::string get_string(const std::string& key) const { return require(key).value; }
    std::string get_string(const std::string& key, const std::string& dflt) const {
        const ConfigEntry* e = find(key);
        return e ? e->value : dflt;
    }

    double parse_double(const ConfigEntry& e, const std::string& token) const {
        const char* s = token.c_str();
        char* end = nullptr;
        double v = std::strtod(s, &end);
        if (end == s || *end != '\0') fail(e, "'" + token + "' is not a number");
        return v;
    }
    std::uint64_t parse_u64(const ConfigEntry& e, const std::string& token) const {
        for (char c : token)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                fail(e, "'" + token + "' is not a nonnegative integer");
        const char* s = token.c_str();
        char* end = nullptr;
        unsigned long long v = std::strtoull(s, &end, 10);
        if (end == s || *end != '\0') fail(e, "'" + token + "' is not a nonnegative integer");
        return static_cast<std::uint64_t>(v);
    }

    // Splits a list value "[a, b, c]" (brackets optional) into tokens. A
    // scalar value is a one-element list, so list keys accept plain values.
    std::vector<std::string> tokens(const ConfigEntry& e) const {
        std::string v = cfgdetail::trim(e.value);
        if (!v.empty() && v.front() == '[') {
            if (v.back() != ']') fail(e, "unterminated list, expected ']'");
            v = v.substr(1, v.size() - 2);
        }
        std::vector<std::string> out;
        std::string cur;
        std::stringstream ss(v);
        while (std::getline(ss, cur, ',')) {
            cur = cfgdetail::trim(cur);
            if (!cur.empty()) out.push_back(cur);
        }
        return out;
    }

    double get_double(const std::string& key) const {
        const ConfigEntry& e = require(key);
        return parse_double(e, cfgdetail::trim(e.value));
    }
    double get_double(const std::string& key, double dflt) const {
        return has(key) ? get_double(key) : dflt;
    }
    std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const {
        const ConfigEntry* e = find(key);
        return e ? parse_u64(*e, cfgdetail::trim(e->value)) : dflt;
    }
    std::size_t get_size(const std::string& key) const {
        const ConfigEntry& e = require(key);
        return static_cast<std::size_t>(parse_u64(e, cfgdetail::trim(e.value)));
    }
    std::size_t get_size(const std::string& key, std::size_t dflt) const {
        return has(key) ? get_size(key) : dflt;
    }
    bool get_bool(const std::string& key, bool dflt) const {
        const ConfigEntry* e = find(key);
        if (!e) return dflt;
        std::string v = cfgdetail::trim(e->value);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        fail(*e, "'" + v + "' is not a boolean (true/false/1/0)");
    }
    std::vector<double> get_double_list(const std::string& key) const {
        const ConfigEntry& e = require(key);
        std::vector<double> out;
        for (const std::string& t : tokens(e)) out.push_back(parse_double(e, t));
        return out;
    }
    std::vector<std::size_t> get_size_list(const std::string& key) const {
        const ConfigEntry& e = require(key);
        std::vector<std::size_t> out;
        for (const std::string& t : tokens(e))
            out.push_back(static_cast<std::size_t>(parse_u64(e, t)));
        return out;
    }

    // Appends or replaces an entry; used by the command line to fold flag
    // values into one config so reports echo a single provenance record.
    void set(const std::string& key, const std::string& value) {
        for (auto& e : entries)
            if (e.key == key) {
                e.value = value;
                return;
            }
        entries.push_back({key, value, 0});
    }
};

inline Config parse_config(const std::string& text, const std::string& source = "<config>") {
    Config cfg;
    cfg.source = source;
    std::stringstream ss(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(ss, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        std::string s = cfgdetail::trim(raw);
        if (s.empty()) continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw error("invalid-input", source + ":" + std::to_string(line) +
                                             ": expected 'key = value', got '" + s + "'");
        ConfigEntry e;
        e.key = cfgdetail::trim(s.substr(0, eq));
        e.value = cfgdetail::trim(s.substr(eq + 1));
        e.line = line;
        if (!cfgdetail::valid_key(e.key))
            throw error("invalid-input", source + ":" + std::to_string(line) +
                                             ": malformed key '" + e.key + "'");
        if (e.value.empty())
            throw error("invalid-input", source + ":" + std::to_string(line) + ": key '" +
                                             e.key + "' has an empty value");
        if (const ConfigEntry* prev = cfg.find(e.key))
            throw error("invalid-input", source + ":" + std::to_string(line) + ": key '" +
                                             e.key + "' already set on line " +
                                             std::to_string(prev->line));
        cfg.entries.push_back(std::move(e));
    }
    return cfg;
}

inline Config parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("invalid-input", "cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

// Canonical one-key-per-line rendering. Parsing the result reproduces the
// same keys and values, which is the report round-trip contract.
inline std::string canonical_text(const Config& cfg) {
    std::string out;
    for (const auto& e : cfg.entries) out += e.key + " = " + e.value + "\n";
    return out;
}

// The law vocabulary shared by every subcommand. A table law is selected by
// the presence of 'table'; otherwise 'alpha' must be present. A positive 'b'
// tilts the built law.
inline const std::vector<std::string>& law_config_keys() {
    static const std::vector<std::string> keys = {"alpha",    "L.kind", "L.gamma",
                                                  "L.c",      "n_max",  "tail_tol",
                                                  "table",    "geo_ratio", "b"};
    return keys;
}

// The law before any tilt. Experiments that build a tilted intersection use
// this directly and interpret the 'b' key as the build tilt instead.
inline InterArrivalLaw base_law_from_config(const Config& cfg) {
    InterArrivalLaw law;
    if (cfg.has("table")) {
        if (cfg.has("alpha"))
            cfg.fail(*cfg.find("alpha"), "a table law does not take a tail exponent");
        law = make_table_law(cfg.get_double_list("table"), cfg.get_double("geo_ratio", 0.0));
    } else {
        if (!cfg.has("alpha")) cfg.missing("alpha");
        if (cfg.has("geo_ratio"))
            cfg.fail(*cfg.find("geo_ratio"), "geo_ratio belongs to a table law");
        std::string kind = cfg.get_string("L.kind", "constant");
        SlowVariation sv;
        if (kind == "constant") {
            if (cfg.has("L.gamma"))
                cfg.fail(*cfg.find("L.gamma"), "L.gamma belongs to L.kind = log-power");
            sv = make_constant_sv(cfg.get_double("L.c", 1.0));
        } else if (kind == "log-power") {
            sv = make_log_power_sv(cfg.get_double("L.gamma"), cfg.get_double("L.c", 1.0));
        } else {
            cfg.fail(*cfg.find("L.kind"), "unknown slow-variation kind '" + kind +
                                              "' (constant, log-power)");
        }
        law = make_power_law(cfg.get_double("alpha"), sv, cfg.get_size("n_max", 4096),
                             cfg.get_double("tail_tol", 1e-9));
    }
    return law;
}

inline double tilt_from_config(const Config& cfg) {
    double b = cfg.get_double("b", 0.0);
    if (b < 0.0 || !std::isfinite(b)) cfg.fail(*cfg.find("b"), "tilt must be nonnegative");
    return b;
}

inline InterArrivalLaw law_from_config(const Config& cfg) {
    InterArrivalLaw law = base_law_from_config(cfg);
    double b = tilt_from_config(cfg);
    if (b > 0.0) law = tilt(law, b);
    return law;
}

} // namespace pinrenew
