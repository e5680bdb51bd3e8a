#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "omcool/constants.hpp"

namespace omcool {

// All rates and frequencies are dimensionless, expressed in units of the
// mechanical frequency omega_c. kappa and gamma are amplitude decay rates
// (mean occupations decay at 2*kappa, 2*gamma).
struct SystemParams {
    double omega_c = 1.0;  // mechanical frequency, unit of all rates
    double delta = 1.0;    // detuning between the two optical modes
    double kappa = 0.1;    // optical amplitude decay rate
    double gamma = 0.01;   // mechanical amplitude decay rate
    double g = 0.0;        // optomechanical coupling
    double n_b = 0.0;      // thermal occupation of the hot optical bath
    double n_c = 0.0;      // thermal occupation of the mechanical bath
    // Physical mechanical frequency in rad/s; enables Kelvin conversions.
    std::optional<double> omega_c_hz{};
};

struct ValidationIssue {
    enum class Severity { hard, warning };
    Severity severity;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool valid() const {
        for (const auto& i : issues)
            if (i.severity == ValidationIssue::Severity::hard) return false;
        return true;
    }
    bool has_warnings() const {
        for (const auto& i : issues)
            if (i.severity == ValidationIssue::Severity::warning) return true;
        return false;
    }
};

// The semiclassical and adjoint-equation layers assume gamma, g << omega_c.
// Rates at or above this fraction of omega_c trigger a soft warning.
inline constexpr double weak_coupling_threshold = 0.1;

inline ValidationReport validate(const SystemParams& p) {
    ValidationReport r;
    auto hard = [&](const std::string& m) {
        r.issues.push_back({ValidationIssue::Severity::hard, m});
    };
    auto warn = [&](const std::string& m) {
        r.issues.push_back({ValidationIssue::Severity::warning, m});
    };

    if (!(p.omega_c > 0)) hard("omega_c must be positive");
    if (!(p.kappa > 0)) hard("kappa must be positive");
    if (!(p.gamma > 0)) hard("gamma must be positive");
    if (!(p.g >= 0)) hard("g must be non-negative");
    if (!(p.n_b >= 0)) hard("n_b must be non-negative");
    if (!(p.n_c >= 0)) hard("n_c must be non-negative");
    if (p.omega_c_hz && !(*p.omega_c_hz > 0))
        hard("omega_c_hz must be positive when given");

    if (r.valid()) {
        if (p.gamma >= weak_coupling_threshold * p.omega_c ||
            p.g >= weak_coupling_threshold * p.omega_c)
            warn("weak-coupling regime violated (gamma, g << omega_c required)");
        if (std::abs(p.delta - p.omega_c) > 1e-12 * p.omega_c)
            warn("detuning off mechanical resonance (delta != omega_c)");
    }
    return r;
}

// Bose-Einstein occupation of a mode at angular frequency omega [rad/s]
// in contact with a bath at temperature T [K].
inline double thermal_occupation(double temperature_k, double omega_rad_s) {
    if (temperature_k < 0)
        throw std::invalid_argument("thermal_occupation: temperature must be >= 0");
    if (!(omega_rad_s > 0))
        throw std::invalid_argument("thermal_occupation: omega must be positive");
    if (temperature_k == 0) return 0.0;
    const double x = constants::hbar * omega_rad_s /
                     (constants::k_B * temperature_k);
    return 1.0 / std::expm1(x);
}

// Temperature of the Gibbs state with mean occupation n at frequency omega.
// Exact inverse of thermal_occupation.
inline double effective_temperature(double occupation, double omega_rad_s) {
    if (occupation < 0)
        throw std::invalid_argument("effective_temperature: occupation must be >= 0");
    if (!(omega_rad_s > 0))
        throw std::invalid_argument("effective_temperature: omega must be positive");
    if (occupation == 0) return 0.0;
    return constants::hbar * omega_rad_s /
           (constants::k_B * std::log1p(1.0 / occupation));
}

// JSON field names match the struct exactly; anything else is rejected so a
// typo in a config cannot silently fall back to a default.
inline SystemParams params_from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known = {
        "omega_c", "delta", "kappa", "gamma", "g", "n_b", "n_c", "omega_c_hz"};
    if (!j.is_object())
        throw std::invalid_argument("params: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw std::invalid_argument("params: unknown key \"" + it.key() + "\"");
    }
    SystemParams p;
    p.omega_c = j.value("omega_c", p.omega_c);
    p.delta = j.value("delta", p.delta);
    p.kappa = j.value("kappa", p.kappa);
    p.gamma = j.value("gamma", p.gamma);
    p.g = j.value("g", p.g);
    p.n_b = j.value("n_b", p.n_b);
    p.n_c = j.value("n_c", p.n_c);
    if (j.contains("omega_c_hz")) p.omega_c_hz = j.at("omega_c_hz").get<double>();
    return p;
}

inline nlohmann::json params_to_json(const SystemParams& p) {
    nlohmann::json j{{"omega_c", p.omega_c}, {"delta", p.delta},
                     {"kappa", p.kappa},     {"gamma", p.gamma},
                     {"g", p.g},             {"n_b", p.n_b},
                     {"n_c", p.n_c}};
    if (p.omega_c_hz) j["omega_c_hz"] = *p.omega_c_hz;
    return j;
}

}  // namespace omcool
