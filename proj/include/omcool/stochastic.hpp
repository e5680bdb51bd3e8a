#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "omcool/params.hpp"
#include "omcool/rng.hpp"

// Semiclassical sampler: the hot optical mode is replaced by a classical
// Ornstein-Uhlenbeck amplitude beta_t; conditioned on one beta path the
// remaining two modes stay Gaussian, so each trajectory only propagates the
// quadrature mean <u> (u = [x_c, y_c, x_a, y_a], vacuum variance 1/2) and
// the non-central second moments V = Re<u u^dag>. The phonon number of a
// trajectory is (V11 + V22 - 1)/2; the physical state is the ensemble mean.
namespace omcool::stochastic {

using complexd = std::complex<double>;

struct NoiseState {
    complexd beta{0.0, 0.0};
    rng::SplitMix64 gen;

    explicit NoiseState(std::uint64_t seed) : gen(seed) {}
};

// Euler-Maruyama update of d beta = -kappa beta dt + sqrt(kappa n_b) (dWx + i dWy),
// with independent Wiener increments of variance dt.
inline void step_noise(NoiseState& s, const SystemParams& p, double dt) {
    if (!(dt > 0)) throw std::invalid_argument("step_noise: dt must be positive");
    double zx, zy;
    rng::normal_pair(s.gen, zx, zy);
    const double amp = std::sqrt(p.kappa * p.n_b * dt);
    s.beta += -p.kappa * s.beta * dt + complexd(amp * zx, amp * zy);
}

// Stationary initial condition: circular complex normal with E|beta|^2 = n_b
// (variance n_b/2 per quadrature), so no artificial noise transient.
inline complexd sample_stationary_beta(double n_b, rng::SplitMix64& gen) {
    if (n_b == 0) return {0.0, 0.0};
    double zx, zy;
    rng::normal_pair(gen, zx, zy);
    const double s = std::sqrt(0.5 * n_b);
    return {s * zx, s * zy};
}

inline NoiseState sample_stationary_noise(const SystemParams& p, std::uint64_t seed) {
    NoiseState s(seed);
    s.beta = sample_stationary_beta(p.n_b, s.gen);
    return s;
}

// Drift matrix of the quadrature SDE for a given noise amplitude, with
// beta_x = beta + beta*, beta_y = i (beta* - beta):
//   [ -gamma    omega_c   0          0       ]
//   [ -omega_c  -gamma    g beta_x   g beta_y]
//   [ -g beta_y 0         -kappa     delta   ]
//   [  g beta_x 0         -delta     -kappa  ]
inline Eigen::Matrix4d drift_matrix(const SystemParams& p, complexd beta) {
    const double bx = 2.0 * beta.real();
    const double by = 2.0 * beta.imag();
    Eigen::Matrix4d a;
    a << -p.gamma, p.omega_c, 0.0, 0.0,
        -p.omega_c, -p.gamma, p.g * bx, p.g * by,
        -p.g * by, 0.0, -p.kappa, p.delta,
        p.g * bx, 0.0, -p.delta, -p.kappa;
    return a;
}

// Radiation-pressure drive [0, g |beta|^2, 0, 0].
inline Eigen::Vector4d drive_vector(const SystemParams& p, complexd beta) {
    Eigen::Vector4d f = Eigen::Vector4d::Zero();
    f(1) = p.g * std::norm(beta);
    return f;
}

// Quantum diffusion diag[gamma(2 n_c + 1), gamma(2 n_c + 1), kappa, kappa].
inline Eigen::Matrix4d diffusion_matrix(const SystemParams& p) {
    Eigen::Matrix4d d = Eigen::Matrix4d::Zero();
    d(0, 0) = d(1, 1) = p.gamma * (2.0 * p.n_c + 1.0);
    d(2, 2) = d(3, 3) = p.kappa;
    return d;
}

struct GaussianTrajectoryState {
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d second_moments = Eigen::Matrix4d::Zero();
    double time = 0;

    double phonon() const {
        return 0.5 * (second_moments(0, 0) + second_moments(1, 1) - 1.0);
    }
};

// Thermal mechanical mode at n_c, optical mode in vacuum, zero means.
inline GaussianTrajectoryState initial_state(const SystemParams& p) {
    GaussianTrajectoryState s;
    s.second_moments.setZero();
    s.second_moments(0, 0) = s.second_moments(1, 1) = 0.5 * (2.0 * p.n_c + 1.0);
    s.second_moments(2, 2) = s.second_moments(3, 3) = 0.5;
    return s;
}

struct BlowUpError : std::runtime_error {
    double time;
    explicit BlowUpError(double t)
        : std::runtime_error("moment integration blew up at t = " +
                             std::to_string(t)),
          time(t) {}
};

// Explicit Euler update of the first and second moments:
//   <u> += (A <u> + f) dt
//   V   += (A V + V A^T + D + F) dt,   F = f <u>^T + <u> f^T
// with F built from the pre-update mean; V is re-symmetrized afterwards.
inline void step_moments(GaussianTrajectoryState& s, const Eigen::Matrix4d& a,
                         const Eigen::Vector4d& f, const SystemParams& p,
                         double dt) {
    if (!(dt > 0)) throw std::invalid_argument("step_moments: dt must be positive");
    const Eigen::Matrix4d d = diffusion_matrix(p);
    const Eigen::Vector4d u0 = s.mean;
    const Eigen::Matrix4d av = a * s.second_moments;
    Eigen::Matrix4d dv = av + av.transpose() + d;
    dv.noalias() += f * u0.transpose() + u0 * f.transpose();
    s.mean += (a * u0 + f) * dt;
    s.second_moments += dv * dt;
    s.second_moments = 0.5 * (s.second_moments +
                              s.second_moments.transpose().eval());
    s.time += dt;

    const double worst = s.second_moments.cwiseAbs().maxCoeff();
    if (!std::isfinite(worst) || worst > 1e15 || !s.mean.allFinite())
        throw BlowUpError(s.time);
}

struct Schedule {
    double t_end = 0;
    // 0 selects the default min(2 pi 1e-3 / omega_c, gamma / (2 omega_c^2));
    // the second bound keeps the explicit Euler V-update contractive against
    // the omega_c rotation (growth ~ 2 omega^2 dt^2 per step vs decay
    // 2 gamma dt).
    double dt = 0;
    long sample_stride = 1;
};

inline double default_dt(const SystemParams& p) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double wc = p.omega_c;
    return std::min(1e-3 * two_pi / wc, 0.5 * p.gamma / (wc * wc));
}

inline double resolved_dt(const SystemParams& p, const Schedule& sch) {
    double dt = sch.dt > 0 ? sch.dt : default_dt(p);
    // Resolution precondition: dt max(omega_c, delta, kappa, g |beta|_typ) < 0.05
    // with |beta|_typ = sqrt(n_b) + 3 sqrt(n_b / 2).
    const double beta_typ = std::sqrt(p.n_b) + 3.0 * std::sqrt(0.5 * p.n_b);
    const double fastest =
        std::max({p.omega_c, std::abs(p.delta), p.kappa, p.g * beta_typ});
    if (!(dt * fastest < 0.05))
        throw std::invalid_argument(
            "schedule: dt too coarse for the fastest rate (dt * rate = " +
            std::to_string(dt * fastest) + ", need < 0.05)");
    return dt;
}

struct TrajectoryResult {
    std::vector<double> t;
    std::vector<double> phonon;
    bool estimator_dipped = false;  // phonon estimator < -1e-6 at some step
};

// One trajectory: beta starts stationary, moments start thermal/vacuum.
// The three updates share one grid; A and f use the pre-step beta (Ito).
// Fully determined by (params, schedule, seed).
inline TrajectoryResult run_trajectory(const SystemParams& p,
                                       const Schedule& sch,
                                       std::uint64_t seed) {
    auto rep = validate(p);
    if (!rep.valid())
        throw std::invalid_argument("run_trajectory: invalid parameters: " +
                                    rep.issues.front().message);
    if (!(sch.t_end > 0))
        throw std::invalid_argument("run_trajectory: t_end must be positive");
    const double dt = resolved_dt(p, sch);
    const long n_steps = static_cast<long>(std::llround(sch.t_end / dt));
    const long stride = std::max<long>(1, sch.sample_stride);

    NoiseState noise = sample_stationary_noise(p, seed);
    GaussianTrajectoryState s = initial_state(p);

    TrajectoryResult out;
    out.t.reserve(static_cast<std::size_t>(n_steps / stride + 2));
    out.phonon.reserve(out.t.capacity());
    auto sample = [&](long step) {
        out.t.push_back(static_cast<double>(step) * dt);
        const double ph = s.phonon();
        if (ph < -1e-6) out.estimator_dipped = true;
        out.phonon.push_back(ph);
    };

    sample(0);
    for (long k = 0; k < n_steps; ++k) {
        const Eigen::Matrix4d a = drift_matrix(p, noise.beta);
        const Eigen::Vector4d f = drive_vector(p, noise.beta);
        step_moments(s, a, f, p, dt);
        step_noise(noise, p, dt);
        if ((k + 1) % stride == 0 || k + 1 == n_steps) sample(k + 1);
    }
    return out;
}

struct EnsembleSeries {
    std::vector<double> t_grid;
    std::vector<double> mean_phonon;
    std::vector<double> std_error;
    int n_traj = 0;
    std::uint64_t master_seed = 0;
    int blowups = 0;  // trajectories excluded (reported; > 1% is an error)
};

// Ensemble of independent trajectories. Trajectory i uses the stream seed
// derive_stream_seed(master_seed, i); results are bit-identical for any
// thread count because each trajectory is self-contained and the reduction
// runs in index order.
inline EnsembleSeries run_ensemble(const SystemParams& p, const Schedule& sch,
                                   int n_traj, std::uint64_t master_seed,
                                   int threads = 1) {
    if (n_traj < 2)
        throw std::invalid_argument("run_ensemble: need at least 2 trajectories");
    if (threads < 1) threads = 1;

    std::vector<TrajectoryResult> results(static_cast<std::size_t>(n_traj));
    std::vector<int> failed(static_cast<std::size_t>(n_traj), 0);

    auto worker = [&](int first) {
        for (int i = first; i < n_traj; i += threads) {
            try {
                results[static_cast<std::size_t>(i)] =
                    run_trajectory(p, sch, rng::derive_stream_seed(master_seed,
                                                                   static_cast<std::uint64_t>(i)));
            } catch (const BlowUpError&) {
                failed[static_cast<std::size_t>(i)] = 1;
            }
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }

    EnsembleSeries es;
    es.n_traj = n_traj;
    es.master_seed = master_seed;
    for (int i = 0; i < n_traj; ++i) es.blowups += failed[static_cast<std::size_t>(i)];
    if (es.blowups * 100 > n_traj)
        throw std::runtime_error("run_ensemble: " + std::to_string(es.blowups) +
                                 " of " + std::to_string(n_traj) +
                                 " trajectories blew up (> 1%)");

    const TrajectoryResult* ref = nullptr;
    for (int i = 0; i < n_traj; ++i)
        if (!failed[static_cast<std::size_t>(i)]) { ref = &results[static_cast<std::size_t>(i)]; break; }
    if (!ref) throw std::runtime_error("run_ensemble: all trajectories failed");

    const std::size_t n_samp = ref->t.size();
    es.t_grid = ref->t;
    es.mean_phonon.assign(n_samp, 0.0);
    es.std_error.assign(n_samp, 0.0);

    const int n_ok = n_traj - es.blowups;
    // Fixed-order two-pass mean/stderr so the result is reduction-order free.
    for (std::size_t k = 0; k < n_samp; ++k) {
        double sum = 0;
        for (int i = 0; i < n_traj; ++i)
            if (!failed[static_cast<std::size_t>(i)])
                sum += results[static_cast<std::size_t>(i)].phonon[k];
        const double mean = sum / n_ok;
        double ss = 0;
        for (int i = 0; i < n_traj; ++i)
            if (!failed[static_cast<std::size_t>(i)]) {
                const double dvi = results[static_cast<std::size_t>(i)].phonon[k] - mean;
                ss += dvi * dvi;
            }
        es.mean_phonon[k] = mean;
        es.std_error[k] = n_ok > 1 ? std::sqrt(ss / (n_ok - 1) / n_ok) : 0.0;
    }
    return es;
}

struct SteadyEstimate {
    double mean = 0;
    double std_error = 0;
    int n_traj = 0;
    int blowups = 0;
};

// Steady-state estimate: each trajectory is time-averaged over the trailing
// tail_fraction of the run, then mean and standard error are taken across
// trajectories (trajectories are independent; within-trajectory samples are
// not, so the per-trajectory average is the correct unit of statistics).
inline SteadyEstimate steady_estimate(const SystemParams& p, const Schedule& sch,
                                      int n_traj, std::uint64_t master_seed,
                                      int threads = 1, double tail_fraction = 0.5) {
    if (n_traj < 2)
        throw std::invalid_argument("steady_estimate: need at least 2 trajectories");
    if (!(tail_fraction > 0 && tail_fraction <= 1))
        throw std::invalid_argument("steady_estimate: tail_fraction in (0, 1]");
    if (threads < 1) threads = 1;

    std::vector<double> tail_avg(static_cast<std::size_t>(n_traj), 0.0);
    std::vector<int> failed(static_cast<std::size_t>(n_traj), 0);
    auto worker = [&](int first) {
        for (int i = first; i < n_traj; i += threads) {
            try {
                const TrajectoryResult tr = run_trajectory(
                    p, sch, rng::derive_stream_seed(master_seed, static_cast<std::uint64_t>(i)));
                const std::size_t n = tr.phonon.size();
                const std::size_t start =
                    static_cast<std::size_t>(std::floor((1.0 - tail_fraction) * n));
                double sum = 0;
                for (std::size_t k = start; k < n; ++k) sum += tr.phonon[k];
                tail_avg[static_cast<std::size_t>(i)] = sum / static_cast<double>(n - start);
            } catch (const BlowUpError&) {
                failed[static_cast<std::size_t>(i)] = 1;
            }
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }

    SteadyEstimate est;
    est.n_traj = n_traj;
    for (int i = 0; i < n_traj; ++i) est.blowups += failed[static_cast<std::size_t>(i)];
    if (est.blowups * 100 > n_traj)
        throw std::runtime_error("steady_estimate: " + std::to_string(est.blowups) +
                                 " of " + std::to_string(n_traj) +
                                 " trajectories blew up (> 1%)");
    const int n_ok = n_traj - est.blowups;
    double sum = 0;
    for (int i = 0; i < n_traj; ++i)
        if (!failed[static_cast<std::size_t>(i)]) sum += tail_avg[static_cast<std::size_t>(i)];
    est.mean = sum / n_ok;
    double ss = 0;
    for (int i = 0; i < n_traj; ++i)
        if (!failed[static_cast<std::size_t>(i)]) {
            const double d = tail_avg[static_cast<std::size_t>(i)] - est.mean;
            ss += d * d;
        }
    est.std_error = n_ok > 1 ? std::sqrt(ss / (n_ok - 1) / n_ok) : 0.0;
    return est;
}

}  // namespace omcool::stochastic
