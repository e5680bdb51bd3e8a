#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <Eigen/UmfPackSupport>
#include <umfpack.h>

#include "omcool/fock.hpp"
#include "omcool/liouvillian.hpp"

namespace omcool::fock {

struct SingularSystemError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SteadyStateResult {
    Eigen::MatrixXcd rho;
    std::vector<double> occupations;  // one per mode, in space order
    std::vector<double> leakage;      // top-level population per mode
    double residual = 0;              // ||L rho||_2 / ||rho||_2, full generator
    double trace_error = 0;           // |tr(rho) - 1| before renormalization
    double min_eigenvalue = 0;

    double occupation(const ModeSpace& ms, const std::string& label) const {
        for (std::size_t m = 0; m < ms.labels.size(); ++m)
            if (ms.labels[m] == label) return occupations[m];
        throw std::invalid_argument("no mode labelled " + label);
    }
};

namespace detail {

// Indices of the zero-charge sector (pairs (m, n) with q[m] == q[n]) in the
// column-stacked vectorization. The unique steady state is invariant under
// the weak U(1) rotation, so it is supported exactly on this sector; solving
// there is an order-of-magnitude smaller linear system.
inline std::vector<int> sector0_indices(const std::vector<int>& q, int d) {
    std::vector<int> idx;
    for (int n = 0; n < d; ++n)
        for (int m = 0; m < d; ++m)
            if (q[static_cast<std::size_t>(m)] == q[static_cast<std::size_t>(n)])
                idx.push_back(n * d + m);
    return idx;
}

inline SparseC restrict_to(const SparseC& l, const std::vector<int>& idx) {
    const int n = static_cast<int>(idx.size());
    std::vector<int> where(static_cast<std::size_t>(l.rows()), -1);
    for (int k = 0; k < n; ++k) where[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = k;
    std::vector<Triplet> tr;
    for (int k = 0; k < l.outerSize(); ++k)
        for (SparseC::InnerIterator it(l, k); it; ++it) {
            const int r = where[static_cast<std::size_t>(it.row())];
            const int c = where[static_cast<std::size_t>(it.col())];
            if (r >= 0 && c >= 0) tr.emplace_back(r, c, it.value());
        }
    SparseC out(n, n);
    out.setFromTriplets(tr.begin(), tr.end());
    return out;
}

// Sparse direct factorization: UMFPACK with nested-dissection ordering (the
// COLAMD default fills in badly on these vectorized-Lindblad patterns), with
// Eigen's own SparseLU as fallback when UMFPACK balks.
class FactorizedLU {
  public:
    explicit FactorizedLU(const SparseC& sys) {
        umf_ = std::make_unique<Eigen::UmfPackLU<SparseC>>();
        umf_->umfpackControl()[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_UNSYMMETRIC;
        umf_->umfpackControl()[UMFPACK_ORDERING] = UMFPACK_ORDERING_METIS;
        umf_->compute(sys);
        if (umf_->info() == Eigen::Success) return;
        umf_.reset();
        slu_ = std::make_unique<Eigen::SparseLU<SparseC>>();
        slu_->analyzePattern(sys);
        slu_->factorize(sys);
        if (slu_->info() != Eigen::Success)
            throw SingularSystemError(
                "sparse solve: system is singular (degenerate stationary manifold?)");
    }

    Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const {
        Eigen::VectorXcd v;
        if (umf_)
            v = umf_->solve(rhs);
        else
            v = slu_->solve(rhs);
        if (!v.allFinite())
            throw ConvergenceError("sparse solve: back-substitution failed");
        return v;
    }

  private:
    std::unique_ptr<Eigen::UmfPackLU<SparseC>> umf_;
    std::unique_ptr<Eigen::SparseLU<SparseC>> slu_;
};

inline Eigen::VectorXcd lu_solve(const SparseC& sys, const Eigen::VectorXcd& rhs) {
    return FactorizedLU(sys).solve(rhs);
}

// Replace one row (the first one that corresponds to a diagonal element of
// rho) with the vectorized trace functional and solve L v = e_row. The
// resulting v is the unique trace-one steady state.
inline Eigen::VectorXcd trace_constrained_solve(const SparseC& l,
                                                const std::vector<int>& diag_positions) {
    const int n = static_cast<int>(l.rows());
    const int pivot_row = diag_positions.front();
    std::vector<Triplet> tr;
    tr.reserve(static_cast<std::size_t>(l.nonZeros()) + diag_positions.size());
    for (int k = 0; k < l.outerSize(); ++k)
        for (SparseC::InnerIterator it(l, k); it; ++it)
            if (it.row() != pivot_row) tr.emplace_back(it.row(), it.col(), it.value());
    for (int pos : diag_positions) tr.emplace_back(pivot_row, pos, 1.0);
    SparseC sys(n, n);
    sys.setFromTriplets(tr.begin(), tr.end());
    sys.makeCompressed();

    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    rhs(pivot_row) = 1.0;
    return lu_solve(sys, rhs);
}

inline double superop_residual(const SparseC& l, const Eigen::VectorXcd& v) {
    return (l * v).norm() / v.norm();
}

}  // namespace detail

// Steady state of a Liouvillian: the null vector fixed by tr(rho) = 1,
// obtained from a sparse LU solve with one row of L replaced by the trace
// row. rho is re-Hermitized as (rho + rho^dag)/2 and renormalized after the
// trace error is recorded. The residual is measured against the full
// generator, so any internal reduction shortcut is checked, not trusted.
inline SteadyStateResult steady_state(const Superoperator& l) {
    const int d = l.dim();
    Eigen::VectorXcd v;
    if (l.charge) {
        const std::vector<int> idx = detail::sector0_indices(*l.charge, d);
        const SparseC ls = detail::restrict_to(l.matrix, idx);
        std::vector<int> diag;
        for (int k = 0; k < static_cast<int>(idx.size()); ++k)
            if (idx[static_cast<std::size_t>(k)] % d == idx[static_cast<std::size_t>(k)] / d)
                diag.push_back(k);
        const Eigen::VectorXcd vs = detail::trace_constrained_solve(ls, diag);
        v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d) * d);
        for (int k = 0; k < static_cast<int>(idx.size()); ++k)
            v(idx[static_cast<std::size_t>(k)]) = vs(k);
    } else {
        std::vector<int> diag;
        for (int k = 0; k < d; ++k) diag.push_back(k * d + k);
        v = detail::trace_constrained_solve(l.matrix, diag);
    }

    SteadyStateResult out;
    out.residual = detail::superop_residual(l.matrix, v);
    if (!(out.residual <= 1e-8))
        throw ConvergenceError("steady_state: residual " +
                               std::to_string(out.residual) + " exceeds 1e-8");

    Eigen::MatrixXcd rho = unvec_density(v, d);
    rho = 0.5 * (rho + rho.adjoint().eval());
    out.trace_error = std::abs(rho.trace() - complexd(1.0, 0.0));
    rho /= rho.trace().real();
    out.rho = rho;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho,
                                                       Eigen::EigenvaluesOnly);
    out.min_eigenvalue = es.eigenvalues().minCoeff();

    for (std::size_t m = 0; m < l.space.dims.size(); ++m)
        out.occupations.push_back(mode_occupation(rho, l.space, m));
    out.leakage = truncation_check(rho, l.space);
    return out;
}

// Independent cross-check: inverse iteration with a tiny shift converges to
// the eigenvector of L with smallest-magnitude eigenvalue, i.e. the steady
// state, without going through the trace-replacement trick.
inline Eigen::MatrixXcd steady_state_inverse_iteration(const Superoperator& l,
                                                       int max_iter = 50,
                                                       double tol = 1e-10) {
    const int d = l.dim();
    SparseC work = l.matrix;
    std::vector<int> idx;
    if (l.charge) {
        idx = detail::sector0_indices(*l.charge, d);
        work = detail::restrict_to(work, idx);
    }
    const int n = static_cast<int>(work.rows());

    // Shift well below the Liouvillian gap but large enough for a clean
    // factorization; the iteration then converges in a couple of steps.
    double scale = 0;
    for (int k = 0; k < work.outerSize(); ++k) {
        double s = 0;
        for (SparseC::InnerIterator it(work, k); it; ++it) s += std::abs(it.value());
        scale = std::max(scale, s);
    }
    const complexd shift(scale * 1e-6, 0.0);
    SparseC shifted = work;
    SparseC eye(n, n);
    eye.setIdentity();
    shifted -= SparseC(shift * eye);

    const detail::FactorizedLU lu(shifted);

    Eigen::VectorXcd v = Eigen::VectorXcd::Ones(n);
    v.normalize();
    double res = 0;
    for (int it = 0; it < max_iter; ++it) {
        v = lu.solve(v);
        v.normalize();
        res = (work * v).norm();
        if (res < tol) break;
    }
    if (!(res < tol))
        throw ConvergenceError("inverse iteration: residual " +
                               std::to_string(res) + " after " +
                               std::to_string(max_iter) + " iterations");

    Eigen::VectorXcd full = v;
    if (l.charge) {
        full = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d) * d);
        for (int k = 0; k < n; ++k) full(idx[static_cast<std::size_t>(k)]) = v(k);
    }
    Eigen::MatrixXcd rho = unvec_density(full, d);
    rho = 0.5 * (rho + rho.adjoint().eval());
    const double tr = rho.trace().real();
    if (std::abs(tr) < 1e-12)
        throw ConvergenceError("inverse iteration: traceless candidate");
    return rho / tr;
}

struct EvolutionSeries {
    std::vector<double> t;
    // One row per time, one column per observable.
    Eigen::MatrixXd values;
    double max_trace_drift = 0;
};

// d rho / dt = L rho integrated with classical RK4 on the vectorized state.
// The step is set from the largest Gershgorin row sum (well inside the RK4
// stability region); if the trace drifts more than 1e-8 the whole run is
// retried with half the step.
inline EvolutionSeries evolve_density_matrix(const Superoperator& l,
                                             const Eigen::MatrixXcd& rho0,
                                             const std::vector<double>& t_grid,
                                             const std::vector<SparseC>& observables,
                                             double dt = 0) {
    const int d = l.dim();
    if (rho0.rows() != d || rho0.cols() != d)
        throw std::invalid_argument("evolve_density_matrix: rho0 dimension mismatch");
    if (t_grid.empty())
        throw std::invalid_argument("evolve_density_matrix: empty t_grid");
    if (t_grid.front() < 0)
        throw std::invalid_argument("evolve_density_matrix: negative time");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("evolve_density_matrix: t_grid not increasing");

    if (dt <= 0) {
        double scale = 0;
        for (int k = 0; k < l.matrix.outerSize(); ++k) {
            double s = 0;
            for (SparseC::InnerIterator it(l.matrix, k); it; ++it)
                s += std::abs(it.value());
            scale = std::max(scale, s);
        }
        dt = scale > 0 ? 1.0 / scale : 0.1;
    }

    for (int attempt = 0; attempt < 8; ++attempt) {
        EvolutionSeries out;
        out.t = t_grid;
        out.values.resize(static_cast<Eigen::Index>(t_grid.size()),
                          static_cast<Eigen::Index>(observables.size()));

        Eigen::VectorXcd v = vec_density(rho0);
        auto record = [&](std::size_t row) {
            const Eigen::MatrixXcd rho = unvec_density(v, d);
            for (std::size_t o = 0; o < observables.size(); ++o)
                out.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(o)) =
                    expectation(rho, observables[o]).real();
            double tr = 0;
            for (int k = 0; k < d; ++k) tr += v(k * d + k).real();
            out.max_trace_drift = std::max(out.max_trace_drift, std::abs(tr - 1.0));
        };

        // Integration always starts at t = 0, whatever the first grid point.
        double t = 0;
        bool reject = false;
        Eigen::VectorXcd k1, k2, k3, k4;
        for (std::size_t row = 0; row < t_grid.size() && !reject; ++row) {
            const double span = t_grid[row] - t;
            if (span > 0) {
                const long n_sub = std::max(1L, static_cast<long>(std::ceil(span / dt)));
                const double h = span / static_cast<double>(n_sub);
                for (long s = 0; s < n_sub; ++s) {
                    k1 = l.matrix * v;
                    k2 = l.matrix * (v + 0.5 * h * k1);
                    k3 = l.matrix * (v + 0.5 * h * k2);
                    k4 = l.matrix * (v + h * k3);
                    v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                }
            }
            t = t_grid[row];
            record(row);
            if (out.max_trace_drift > 1e-8) reject = true;
        }
        if (!reject) return out;
        dt *= 0.5;
    }
    throw ConvergenceError(
        "evolve_density_matrix: trace drift above 1e-8 even after step halving");
}

// Plain text triplet export, one "row col re im" line per stored entry.
inline void export_triplets(const SparseC& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("export_triplets: cannot open " + path);
    f << "% sparse complex triplets: rows cols nnz\n";
    f << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
    f.precision(17);
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseC::InnerIterator it(m, k); it; ++it)
            f << it.row() << " " << it.col() << " " << it.value().real() << " "
              << it.value().imag() << "\n";
    if (!f) throw std::runtime_error("export_triplets: write failed for " + path);
}

inline SparseC import_triplets(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("import_triplets: cannot open " + path);
    std::string header;
    std::getline(f, header);
    long rows = 0, cols = 0, nnz = 0;
    f >> rows >> cols >> nnz;
    std::vector<Triplet> tr;
    tr.reserve(static_cast<std::size_t>(nnz));
    for (long k = 0; k < nnz; ++k) {
        long r = 0, c = 0;
        double re = 0, im = 0;
        if (!(f >> r >> c >> re >> im))
            throw std::runtime_error("import_triplets: truncated file " + path);
        tr.emplace_back(static_cast<int>(r), static_cast<int>(c), complexd(re, im));
    }
    SparseC m(rows, cols);
    m.setFromTriplets(tr.begin(), tr.end());
    return m;
}

}  // namespace omcool::fock
