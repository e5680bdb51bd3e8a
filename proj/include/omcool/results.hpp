#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace omcool {

// One output row per (grid point, method). Column set and order are frozen;
// the CSV header is golden-tested.
struct ResultRow {
    double n_b = 0;
    std::string method;
    double n_c_mean = 0;
    double n_c_stderr = 0;  // 0 for deterministic methods
    double n_a_mean = 0;
    double effective_t = 0;
    std::string diagnostics;  // "key=value;..." or "error: ..."
};

inline constexpr const char* result_csv_header =
    "n_b,method,n_c_mean,n_c_stderr,n_a_mean,effective_T,diagnostics";

// Shortest round-trippable decimal form (integers stay plain); stable and
// locale-independent, so rerunning a config reproduces output byte by byte.
inline std::string format_double(double v) {
    char buf[40];
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double parsed = 0;
        std::sscanf(buf, "%lf", &parsed);
        if (parsed == v || (std::isnan(parsed) && std::isnan(v))) return buf;
    }
    return buf;
}

inline std::string to_csv(const std::vector<ResultRow>& rows,
                          const nlohmann::json& config) {
    std::ostringstream out;
    out << "# config=" << config.dump() << "\n";
    out << result_csv_header << "\n";
    for (const auto& r : rows) {
        out << format_double(r.n_b) << ',' << r.method << ','
            << format_double(r.n_c_mean) << ',' << format_double(r.n_c_stderr)
            << ',' << format_double(r.n_a_mean) << ','
            << format_double(r.effective_t) << ',' << r.diagnostics << "\n";
    }
    return out.str();
}

inline nlohmann::json to_json(const std::vector<ResultRow>& rows,
                              const nlohmann::json& config) {
    nlohmann::json jrows = nlohmann::json::array();
    for (const auto& r : rows) {
        jrows.push_back({{"n_b", r.n_b},
                         {"method", r.method},
                         {"n_c_mean", r.n_c_mean},
                         {"n_c_stderr", r.n_c_stderr},
                         {"n_a_mean", r.n_a_mean},
                         {"effective_T", r.effective_t},
                         {"diagnostics", r.diagnostics}});
    }
    return nlohmann::json{{"config", config}, {"rows", jrows}};
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed for " + path);
}

// Time series companion file (t, mean, stderr per line).
inline std::string series_csv(const std::vector<double>& t,
                              const std::vector<double>& mean,
                              const std::vector<double>& stderr_,
                              const nlohmann::json& config) {
    if (t.size() != mean.size() || t.size() != stderr_.size())
        throw std::invalid_argument("series_csv: length mismatch");
    std::ostringstream out;
    out << "# config=" << config.dump() << "\n";
    out << "t,n_c_mean,n_c_stderr\n";
    for (std::size_t k = 0; k < t.size(); ++k)
        out << format_double(t[k]) << ',' << format_double(mean[k]) << ','
            << format_double(stderr_[k]) << "\n";
    return out.str();
}

// Pulls the config back out of a result file's leading comment line.
inline nlohmann::json config_from_result_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string line;
    const std::string prefix = "# config=";
    while (std::getline(f, line)) {
        if (line.rfind(prefix, 0) == 0)
            return nlohmann::json::parse(line.substr(prefix.size()));
    }
    throw std::runtime_error("no embedded config comment found in " + path);
}

}  // namespace omcool
