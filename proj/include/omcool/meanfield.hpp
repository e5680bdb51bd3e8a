#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "omcool/params.hpp"

// Analytic layer for the two-mode reduced dynamics: the hot optical mode is
// traced out, leaving jump processes a c^dag / a^dag c at rates set by its
// occupation, plus an intensity-noise term that only renormalizes the
// mechanical bath. Factorizing <n_a n_c> ~= <n_a><n_c> closes the occupation
// equations and gives the steady state in closed form.
namespace omcool::meanfield {

struct MeanFieldRates {
    double rate_down = 0;   // g^2 (1+n_b) / (2 kappa), jump a c^dag
    double rate_up = 0;     // g^2 n_b / (2 kappa), jump a^dag c
    double heat_rate = 0;   // 2 kappa g^2 (n_b^2+n_b) / (4 kappa^2 + omega_c^2)
    double n_c_tilde = 0;   // n_c + heat_rate / gamma
    double eta = 0;         // 1 + n_b (1 + kappa/gamma) + 2 kappa^2 / g^2
    bool coupling_off = false;     // g == 0: eta is infinite, use decoupled limits
    bool weak_coupling_valid = true;
};

struct OccupationPair {
    double n_a = 0;
    double n_c = 0;
};

inline MeanFieldRates rates(const SystemParams& p) {
    auto rep = validate(p);
    if (!rep.valid())
        throw std::invalid_argument("meanfield::rates: invalid parameters: " +
                                    rep.issues.front().message);
    MeanFieldRates r;
    r.weak_coupling_valid = p.gamma < weak_coupling_threshold * p.omega_c &&
                            p.g < weak_coupling_threshold * p.omega_c;
    const double g2 = p.g * p.g;
    r.rate_down = g2 * (1.0 + p.n_b) / (2.0 * p.kappa);
    r.rate_up = g2 * p.n_b / (2.0 * p.kappa);
    r.heat_rate = 2.0 * p.kappa * g2 * (p.n_b * p.n_b + p.n_b) /
                  (4.0 * p.kappa * p.kappa + p.omega_c * p.omega_c);
    r.n_c_tilde = p.n_c + r.heat_rate / p.gamma;
    if (p.g == 0) {
        r.coupling_off = true;
        r.eta = std::numeric_limits<double>::infinity();
    } else {
        r.eta = 1.0 + p.n_b * (1.0 + p.kappa / p.gamma) +
                2.0 * p.kappa * p.kappa / g2;
    }
    return r;
}

// Steady-state occupations. <n_c> is the positive root of
//   y^2 + y (eta - nct) - nct (eta - n_b kappa / gamma) = 0,
// evaluated in the cancellation-free form 2c / (b + sqrt(b^2 + 4c)), and
// <n_a> = (nct - <n_c>) gamma / kappa.
inline OccupationPair steady_state(const SystemParams& p) {
    const MeanFieldRates r = rates(p);
    if (r.coupling_off) return {0.0, p.n_c};

    const double b = r.eta - r.n_c_tilde;
    const double c = r.n_c_tilde * (r.eta - p.n_b * p.kappa / p.gamma);
    const double disc = b * b + 4.0 * c;
    if (disc < 0 || c < 0)
        throw std::runtime_error(
            "meanfield::steady_state: negative discriminant (internal error)");
    OccupationPair out;
    out.n_c = (c == 0) ? 0.0 : 2.0 * c / (b + std::sqrt(disc));
    out.n_a = (r.n_c_tilde - out.n_c) * p.gamma / p.kappa;
    return out;
}

// Coefficients of the closed occupation ODEs,
//   dx/dt = -2 kappa x - G [ (n_b+1) x - n_b y + x y ]
//   dy/dt = -2 gamma y + 2 gamma nct - G [ n_b y - (n_b+1) x - x y ]
// with x = <n_a>, y = <n_c>, G = g^2/kappa. The bracketed coupling terms
// cancel in d(x+y)/dt, so with the damping rates zeroed the pair conserves
// x + y exactly. Kept explicit so that limit is representable.
struct AdjointRates {
    double kappa = 0;      // photon damping prefactor
    double gamma = 0;      // phonon damping prefactor
    double coupling = 0;   // G = g^2 / kappa
    double n_b = 0;
    double n_c_tilde = 0;

    void rhs(double x, double y, double& dx, double& dy) const {
        const double bracket = (n_b + 1.0) * x - n_b * y + x * y;
        dx = -2.0 * kappa * x - coupling * bracket;
        dy = -2.0 * gamma * (y - n_c_tilde) + coupling * bracket;
    }
};

inline AdjointRates adjoint_rates(const SystemParams& p) {
    const MeanFieldRates r = rates(p);
    AdjointRates a;
    a.kappa = p.kappa;
    a.gamma = p.gamma;
    a.coupling = p.g * p.g / p.kappa;
    a.n_b = p.n_b;
    a.n_c_tilde = r.n_c_tilde;
    return a;
}

struct EvolveOptions {
    // 0 selects the default min(0.1/kappa, 0.1/gamma, 0.01).
    double dt = 0;
    // Largest tolerated relative change of (x, y) in one step before the
    // step size is halved; after max_halvings the integration fails.
    double max_rel_step = 0.25;
    int max_halvings = 20;
};

struct EvolveDiagnostics {
    bool clamped_negative = false;  // occupations pinned at 0 at least once
    int halvings = 0;
    double dt_used = 0;
};

namespace detail {

inline void rk4_step(const AdjointRates& a, double h, double& x, double& y) {
    double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
    a.rhs(x, y, k1x, k1y);
    a.rhs(x + 0.5 * h * k1x, y + 0.5 * h * k1y, k2x, k2y);
    a.rhs(x + 0.5 * h * k2x, y + 0.5 * h * k2y, k3x, k3y);
    a.rhs(x + h * k3x, y + h * k3y, k4x, k4y);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
}

}  // namespace detail

// Integrates the occupation ODEs over t_grid (strictly increasing, starting
// at 0) with classical fixed-step RK4.
inline std::vector<OccupationPair> evolve_occupations(
    const AdjointRates& a, OccupationPair initial,
    const std::vector<double>& t_grid, EvolveOptions opt = {},
    EvolveDiagnostics* diag = nullptr) {
    if (t_grid.empty() || t_grid.front() != 0)
        throw std::invalid_argument("evolve_occupations: t_grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument(
                "evolve_occupations: t_grid must be strictly increasing");
    if (initial.n_a < 0 || initial.n_c < 0)
        throw std::invalid_argument("evolve_occupations: negative initial occupation");

    double dt = opt.dt;
    if (dt <= 0) {
        dt = 0.01;
        if (a.kappa > 0) dt = std::min(dt, 0.1 / a.kappa);
        if (a.gamma > 0) dt = std::min(dt, 0.1 / a.gamma);
    }

    EvolveDiagnostics d;
    d.dt_used = dt;
    std::vector<OccupationPair> out;
    out.reserve(t_grid.size());
    out.push_back(initial);

    double x = initial.n_a, y = initial.n_c;
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double span = t_grid[i] - t_grid[i - 1];
        long n_sub = static_cast<long>(std::ceil(span / dt));
        if (n_sub < 1) n_sub = 1;
        double h = span / static_cast<double>(n_sub);
        long k = 0;
        while (k < n_sub) {
            const double x0 = x, y0 = y;
            detail::rk4_step(a, h, x, y);
            const double scale = std::max({std::abs(x0), std::abs(y0), 1.0});
            const double change =
                std::max(std::abs(x - x0), std::abs(y - y0)) / scale;
            if (change > opt.max_rel_step) {
                if (++d.halvings > opt.max_halvings)
                    throw std::runtime_error(
                        "evolve_occupations: step-size rejection limit reached");
                x = x0;
                y = y0;
                h *= 0.5;
                n_sub = (n_sub - k) * 2 + k;  // remaining steps doubled
                continue;
            }
            if (x < 0) { x = 0; d.clamped_negative = true; }
            if (y < 0) { y = 0; d.clamped_negative = true; }
            ++k;
        }
        out.push_back({x, y});
    }
    if (diag) *diag = d;
    return out;
}

inline std::vector<OccupationPair> evolve_occupations(
    const SystemParams& p, OccupationPair initial,
    const std::vector<double>& t_grid, EvolveOptions opt = {},
    EvolveDiagnostics* diag = nullptr) {
    return evolve_occupations(adjoint_rates(p), initial, t_grid, opt, diag);
}

}  // namespace omcool::meanfield
