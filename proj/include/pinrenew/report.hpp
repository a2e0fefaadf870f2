#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "errors.hpp"

namespace pinrenew {

inline const char* code_version() { return "pinrenew 1.0.0"; }

// 17 significant digits round-trip a double exactly, so identical inputs
// produce identical bytes; that is the whole determinism contract of the
// CSV outputs.
inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
inline std::string format_cell(double v) { return format_g17(v); }
inline std::string format_cell(std::size_t v) { return std::to_string(v); }
inline std::string format_cell(bool v) { return v ? "1" : "0"; }

// One CSV payload: fixed header, rows of preformatted cells, LF endings.
struct CsvTable {
    std::string name; // file name, e.g. "fe.csv"
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string text() const {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out += ',';
            out += header[i];
        }
        out += '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += ',';
                out += row[i];
            }
            out += '\n';
        }
        return out;
    }
};

// A numeric result with its provenance tag. Exactly one tag per value:
// "exact" for identities that hold to machine rounding,
// "certified-truncation" for series or solver values with a certified
// remainder, "monte-carlo" for sampled estimates, which alone carry an SE.
struct TaggedValue {
    std::string name;
    double value = 0.0;
    std::string tag;
    double se = std::numeric_limits<double>::quiet_NaN();
};

inline TaggedValue tag_exact(const std::string& name, double v) {
    return {name, v, "exact", std::numeric_limits<double>::quiet_NaN()};
}
inline TaggedValue tag_certified(const std::string& name, double v) {
    return {name, v, "certified-truncation", std::numeric_limits<double>::quiet_NaN()};
}
inline TaggedValue tag_mc(const std::string& name, double v, double se) {
    return {name, v, "monte-carlo", se};
}

struct ExperimentReport {
    std::string experiment;
    std::vector<std::pair<std::string, std::string>> config_echo;
    std::string generator; // RNG version tag, empty for non-sampling runs
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<TaggedValue> results;
    std::vector<std::pair<std::string, bool>> verdicts; // informational flags
    std::vector<std::pair<std::string, bool>> asserted; // gate the exit status
    std::vector<CsvTable> csv;
    double wall_seconds = 0.0;

    bool asserted_ok() const {
        for (const auto& [name, ok] : asserted)
            if (!ok) return false;
        return true;
    }

    // The echo as config text; parsing it back reproduces the input config.
    std::string echo_text() const {
        std::string out;
        for (const auto& [k, v] : config_echo) out += k + " = " + v + "\n";
        return out;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["experiment"] = experiment;
        nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
        for (const auto& [k, v] : config_echo) cfg[k] = v;
        j["config"] = cfg;
        j["versions"] = {{"code", code_version()}, {"generator", generator}};
        if (!meta.empty()) {
            nlohmann::ordered_json m = nlohmann::ordered_json::object();
            for (const auto& [k, v] : meta) m[k] = v;
            j["meta"] = m;
        }
        nlohmann::ordered_json rs = nlohmann::ordered_json::array();
        for (const auto& r : results) {
            nlohmann::ordered_json e;
            e["name"] = r.name;
            e["value"] = r.value;
            e["tag"] = r.tag;
            if (r.tag == "monte-carlo") e["se"] = r.se;
            rs.push_back(e);
        }
        j["results"] = rs;
        nlohmann::ordered_json vd = nlohmann::ordered_json::object();
        for (const auto& [k, v] : verdicts) vd[k] = v;
        j["verdicts"] = vd;
        nlohmann::ordered_json as = nlohmann::ordered_json::object();
        for (const auto& [k, v] : asserted) as[k] = v;
        j["asserted"] = as;
        nlohmann::ordered_json files = nlohmann::ordered_json::array();
        for (const auto& t : csv) files.push_back(t.name);
        j["csv_files"] = files;
        j["wall_seconds"] = wall_seconds;
        return j;
    }
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("io-error", "cannot open '" + path + "' for writing");
    out << content;
    out.flush();
    if (!out) throw error("io-error", "write failed on '" + path + "'");
}

} // namespace pinrenew
