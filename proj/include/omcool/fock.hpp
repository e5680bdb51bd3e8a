#pragma once

#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "omcool/params.hpp"

// Truncated-Fock operator algebra. Multi-mode operators are Kronecker
// products in the fixed tensor order a (x) b (x) c; basis index
// k = (i_a N_b + i_b) N_c + i_c.
namespace omcool::fock {

using complexd = std::complex<double>;
using SparseC = Eigen::SparseMatrix<complexd>;
using Triplet = Eigen::Triplet<complexd>;

struct TruncationSpec {
    int n_a_dim = 6;
    int n_b_dim = 6;
    int n_c_dim = 6;
    int dim_limit = 512;  // refuse anything with N_a N_b N_c above this

    int total_dim() const { return n_a_dim * n_b_dim * n_c_dim; }

    void check() const {
        if (n_a_dim < 2 || n_b_dim < 2 || n_c_dim < 2)
            throw std::invalid_argument("truncation: every mode needs dim >= 2");
        if (total_dim() > dim_limit)
            throw std::invalid_argument(
                "truncation: total dimension " + std::to_string(total_dim()) +
                " exceeds limit " + std::to_string(dim_limit));
    }
};

// A list of per-mode dimensions; covers the one-, two- and three-mode cases.
struct ModeSpace {
    std::vector<int> dims;
    std::vector<std::string> labels;

    int total_dim() const {
        return std::accumulate(dims.begin(), dims.end(), 1,
                               [](int a, int b) { return a * b; });
    }
};

inline ModeSpace mode_space(const TruncationSpec& t) {
    t.check();
    return {{t.n_a_dim, t.n_b_dim, t.n_c_dim}, {"a", "b", "c"}};
}

// sqrt(k) on the (k-1, k) positions.
inline SparseC annihilation(int dim) {
    if (dim < 2) throw std::invalid_argument("annihilation: dim must be >= 2");
    SparseC a(dim, dim);
    std::vector<Triplet> tr;
    tr.reserve(static_cast<std::size_t>(dim - 1));
    for (int k = 1; k < dim; ++k)
        tr.emplace_back(k - 1, k, std::sqrt(static_cast<double>(k)));
    a.setFromTriplets(tr.begin(), tr.end());
    return a;
}

inline SparseC number_operator(int dim) {
    SparseC n(dim, dim);
    std::vector<Triplet> tr;
    for (int k = 1; k < dim; ++k)
        tr.emplace_back(k, k, static_cast<double>(k));
    n.setFromTriplets(tr.begin(), tr.end());
    return n;
}

inline SparseC identity(int dim) {
    SparseC id(dim, dim);
    id.setIdentity();
    return id;
}

inline SparseC kron(const SparseC& a, const SparseC& b) {
    SparseC out(a.rows() * b.rows(), a.cols() * b.cols());
    std::vector<Triplet> tr;
    tr.reserve(static_cast<std::size_t>(a.nonZeros()) * b.nonZeros());
    for (int ka = 0; ka < a.outerSize(); ++ka)
        for (SparseC::InnerIterator ia(a, ka); ia; ++ia)
            for (int kb = 0; kb < b.outerSize(); ++kb)
                for (SparseC::InnerIterator ib(b, kb); ib; ++ib)
                    tr.emplace_back(ia.row() * b.rows() + ib.row(),
                                    ia.col() * b.cols() + ib.col(),
                                    ia.value() * ib.value());
    out.setFromTriplets(tr.begin(), tr.end());
    return out;
}

// Embed a single-mode operator at position `mode` of the space.
inline SparseC embed(const ModeSpace& ms, std::size_t mode, const SparseC& op) {
    if (mode >= ms.dims.size()) throw std::invalid_argument("embed: bad mode index");
    SparseC out = (mode == 0) ? op : identity(ms.dims[0]);
    for (std::size_t m = 1; m < ms.dims.size(); ++m)
        out = kron(out, m == mode ? op : identity(ms.dims[m]));
    return out;
}

// H = delta n_a + omega_c n_c + g (a + b)^dag (a + b) (c + c^dag)
// on the rotating frame of the cold optical mode (mode b at zero frequency).
inline SparseC hamiltonian(const SystemParams& p, const TruncationSpec& t) {
    const ModeSpace ms = mode_space(t);
    const SparseC a = embed(ms, 0, annihilation(t.n_a_dim));
    const SparseC b = embed(ms, 1, annihilation(t.n_b_dim));
    const SparseC c = embed(ms, 2, annihilation(t.n_c_dim));
    const SparseC ad = SparseC(a.adjoint());
    const SparseC bd = SparseC(b.adjoint());
    const SparseC optical = SparseC(ad * a) + SparseC(bd * b) + SparseC(ad * b) + SparseC(bd * a);
    const SparseC pos = c + SparseC(c.adjoint());
    SparseC h = p.delta * embed(ms, 0, number_operator(t.n_a_dim)) +
                p.omega_c * embed(ms, 2, number_operator(t.n_c_dim)) +
                p.g * SparseC(optical * pos);
    h.prune(complexd(0.0), 0.0);
    return h;
}

// tr(rho O); the imaginary part is returned so callers can check it is
// residue for Hermitian observables.
inline complexd expectation(const Eigen::MatrixXcd& rho, const SparseC& op) {
    if (rho.rows() != op.rows() || rho.cols() != op.cols())
        throw std::invalid_argument("expectation: dimension mismatch");
    complexd tr = 0;
    for (int k = 0; k < op.outerSize(); ++k)
        for (SparseC::InnerIterator it(op, k); it; ++it)
            tr += rho(it.col(), it.row()) * it.value();
    return tr;
}

// Mean occupation of one mode straight from the density-matrix diagonal.
inline double mode_occupation(const Eigen::MatrixXcd& rho, const ModeSpace& ms,
                              std::size_t mode) {
    const int d = ms.total_dim();
    if (rho.rows() != d) throw std::invalid_argument("mode_occupation: dimension mismatch");
    int block = 1;
    for (std::size_t m = mode + 1; m < ms.dims.size(); ++m) block *= ms.dims[m];
    double out = 0;
    for (int k = 0; k < d; ++k) {
        const int level = (k / block) % ms.dims[mode];
        out += level * rho(k, k).real();
    }
    return out;
}

// Population of the top retained Fock level of each mode: the truncation
// error proxy. Anything above 1e-3 should be treated as a red flag.
inline std::vector<double> truncation_check(const Eigen::MatrixXcd& rho,
                                            const ModeSpace& ms) {
    std::vector<double> leak(ms.dims.size(), 0.0);
    const int d = ms.total_dim();
    for (std::size_t mode = 0; mode < ms.dims.size(); ++mode) {
        int block = 1;
        for (std::size_t m = mode + 1; m < ms.dims.size(); ++m) block *= ms.dims[m];
        for (int k = 0; k < d; ++k)
            if ((k / block) % ms.dims[mode] == ms.dims[mode] - 1)
                leak[mode] += rho(k, k).real();
    }
    return leak;
}

inline constexpr double truncation_leak_warn = 1e-3;

// Thermal state truncated at dim levels and renormalized; for a linearly
// damped mode this is the exact steady state of the truncated dynamics.
inline Eigen::MatrixXcd thermal_state(double n, int dim) {
    if (n < 0) throw std::invalid_argument("thermal_state: n must be >= 0");
    Eigen::VectorXd pops(dim);
    if (n == 0) {
        pops.setZero();
        pops(0) = 1.0;
    } else {
        const double q = n / (n + 1.0);
        double pk = 1.0;
        for (int k = 0; k < dim; ++k) {
            pops(k) = pk;
            pk *= q;
        }
        pops /= pops.sum();
    }
    return pops.cast<complexd>().asDiagonal();
}

inline double truncated_thermal_mean(double n, int dim) {
    const Eigen::MatrixXcd rho = thermal_state(n, dim);
    double mean = 0;
    for (int k = 0; k < dim; ++k) mean += k * rho(k, k).real();
    return mean;
}

// Default cutoffs: at least 6 levels, about 5 quanta of headroom per
// expected occupation, shrunk proportionally if the product exceeds the
// global limit. Always pair with truncation_check on the result.
inline TruncationSpec default_truncation(const SystemParams& p, int limit = 512) {
    auto pick = [limit](double occ) {
        const double want = std::ceil(5.0 * (occ + 1.0));
        return std::max(6, static_cast<int>(std::min<double>(want, limit)));
    };
    TruncationSpec t;
    t.dim_limit = limit;
    t.n_a_dim = pick(0.0);
    t.n_b_dim = pick(p.n_b);
    t.n_c_dim = pick(p.n_c);
    while (t.total_dim() > limit) {
        int* biggest = &t.n_a_dim;
        if (t.n_b_dim > *biggest) biggest = &t.n_b_dim;
        if (t.n_c_dim > *biggest) biggest = &t.n_c_dim;
        if (*biggest <= 2) break;
        --*biggest;
    }
    return t;
}

}  // namespace omcool::fock
