#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "omcool/fock.hpp"
#include "omcool/meanfield.hpp"
#include "omcool/params.hpp"

namespace omcool::fock {

// Vectorization is column-stacking throughout: vec(rho)[j * d + i] = rho(i, j),
// so vec(A rho B) = (B^T (x) A) vec(rho). A Lindblad term
//   D_x(rho) = 2 x rho x^dag - x^dag x rho - rho x^dag x
// therefore maps to 2 (conj(x) (x) x) - I (x) x^dag x - (x^dag x)^T (x) I.
struct Superoperator {
    SparseC matrix;       // d^2 x d^2
    ModeSpace space;
    // Per-basis-state conserved charge of a weak U(1) symmetry, if the
    // generator has one: matrix elements only connect (m, n) pairs with equal
    // charge difference, and the steady state lives in the zero-difference
    // sector. Verified against the assembled matrix at build time.
    std::optional<std::vector<int>> charge;

    int dim() const { return space.total_dim(); }
};

inline Eigen::VectorXcd vec_density(const Eigen::MatrixXcd& rho) {
    return Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
}

inline Eigen::MatrixXcd unvec_density(const Eigen::VectorXcd& v, int d) {
    if (v.size() != static_cast<Eigen::Index>(d) * d)
        throw std::invalid_argument("unvec_density: size mismatch");
    return Eigen::Map<const Eigen::MatrixXcd>(v.data(), d, d);
}

namespace detail {

inline SparseC left_mult(const SparseC& op) {  // rho -> op rho
    return kron(identity(static_cast<int>(op.rows())), op);
}

inline SparseC right_mult(const SparseC& op) {  // rho -> rho op
    return kron(SparseC(op.transpose()), identity(static_cast<int>(op.rows())));
}

inline SparseC dissipator_superop(const SparseC& x) {
    const SparseC xd = SparseC(x.adjoint());
    const SparseC xdx = SparseC(xd * x);
    const SparseC xc = x.conjugate();
    return SparseC(2.0 * kron(xc, x)) - left_mult(xdx) - right_mult(xdx);
}

inline void verify_charge(const SparseC& l, const std::vector<int>& q, int d) {
    for (int k = 0; k < l.outerSize(); ++k)
        for (SparseC::InnerIterator it(l, k); it; ++it) {
            const int row_m = static_cast<int>(it.row()) % d;
            const int row_n = static_cast<int>(it.row()) / d;
            const int col_m = static_cast<int>(it.col()) % d;
            const int col_n = static_cast<int>(it.col()) / d;
            if (q[row_m] - q[row_n] != q[col_m] - q[col_n])
                throw std::logic_error(
                    "liouvillian: declared charge is not conserved by the generator");
        }
}

}  // namespace detail

struct LindbladTerm {
    double rate;
    SparseC op;
};

// -i [H, rho] + sum_k rate_k D_{op_k}(rho), assembled on the vectorized space.
inline Superoperator lindblad_superoperator(const SparseC& h,
                                            const std::vector<LindbladTerm>& jumps,
                                            ModeSpace space,
                                            std::optional<std::vector<int>> charge = {}) {
    const int d = space.total_dim();
    if (h.rows() != d)
        throw std::invalid_argument("lindblad_superoperator: H dimension mismatch");
    const std::int64_t unknowns = static_cast<std::int64_t>(d) * d;
    if (unknowns > (1 << 20))
        throw std::invalid_argument(
            "lindblad_superoperator: vectorized dimension " +
            std::to_string(unknowns) + " exceeds the solver budget");

    const complexd i_unit(0.0, 1.0);
    SparseC l = SparseC(-i_unit * (detail::left_mult(h) - detail::right_mult(h)));
    for (const auto& term : jumps) {
        if (term.op.rows() != d)
            throw std::invalid_argument("lindblad_superoperator: jump dimension mismatch");
        if (term.rate == 0) continue;
        l += SparseC(term.rate * detail::dissipator_superop(term.op));
    }
    l.prune(complexd(0.0), 0.0);
    l.makeCompressed();

    if (charge) {
        if (static_cast<int>(charge->size()) != d)
            throw std::invalid_argument("lindblad_superoperator: charge size mismatch");
        detail::verify_charge(l, *charge, d);
    }
    return {std::move(l), std::move(space), std::move(charge)};
}

// Full three-mode master equation: coherent part from hamiltonian(), plus
//   kappa D_a, (1+n_b) kappa D_b + n_b kappa D_bdag,
//   (1+n_c) gamma D_c + n_c gamma D_cdag.
// The total optical quantum number n_a + n_b is a weak symmetry (the
// radiation-pressure coupling only exchanges photons between the optical
// modes), which the steady-state solver exploits.
inline Superoperator liouvillian_full(const SystemParams& p, const TruncationSpec& t) {
    const ModeSpace ms = mode_space(t);
    const SparseC a = embed(ms, 0, annihilation(t.n_a_dim));
    const SparseC b = embed(ms, 1, annihilation(t.n_b_dim));
    const SparseC c = embed(ms, 2, annihilation(t.n_c_dim));

    std::vector<LindbladTerm> jumps;
    jumps.push_back({p.kappa, a});
    jumps.push_back({(1.0 + p.n_b) * p.kappa, b});
    jumps.push_back({p.n_b * p.kappa, SparseC(b.adjoint())});
    jumps.push_back({(1.0 + p.n_c) * p.gamma, c});
    jumps.push_back({p.n_c * p.gamma, SparseC(c.adjoint())});

    std::vector<int> charge(static_cast<std::size_t>(ms.total_dim()));
    for (int k = 0; k < ms.total_dim(); ++k) {
        const int ia = k / (t.n_b_dim * t.n_c_dim);
        const int ib = (k / t.n_c_dim) % t.n_b_dim;
        charge[static_cast<std::size_t>(k)] = ia + ib;
    }
    return lindblad_superoperator(hamiltonian(p, t), jumps, ms, std::move(charge));
}

// Reduced two-mode master equation on modes a, c after eliminating the hot
// optical mode: free part delta n_a + omega_c n_c, local damping with the
// mechanical bath renormalized to n_c_tilde, plus the exchange dissipators
//   (g^2 / 2 kappa) [ (1+n_b) D_{a c^dag} + n_b D_{a^dag c} ].
// Here n_a + n_c is the conserved weak-symmetry charge.
inline Superoperator liouvillian_reduced(const SystemParams& p, int n_a_dim,
                                         int n_c_dim, int dim_limit = 512) {
    if (n_a_dim < 2 || n_c_dim < 2)
        throw std::invalid_argument("liouvillian_reduced: dims must be >= 2");
    ModeSpace ms{{n_a_dim, n_c_dim}, {"a", "c"}};
    if (ms.total_dim() > dim_limit)
        throw std::invalid_argument(
            "liouvillian_reduced: total dimension " + std::to_string(ms.total_dim()) +
            " exceeds limit " + std::to_string(dim_limit));

    const meanfield::MeanFieldRates r = meanfield::rates(p);
    const SparseC a = embed(ms, 0, annihilation(n_a_dim));
    const SparseC c = embed(ms, 1, annihilation(n_c_dim));
    const SparseC ad = SparseC(a.adjoint());
    const SparseC cd = SparseC(c.adjoint());

    SparseC h = p.delta * embed(ms, 0, number_operator(n_a_dim)) +
                p.omega_c * embed(ms, 1, number_operator(n_c_dim));

    std::vector<LindbladTerm> jumps;
    jumps.push_back({p.kappa, a});
    jumps.push_back({(1.0 + r.n_c_tilde) * p.gamma, c});
    jumps.push_back({r.n_c_tilde * p.gamma, cd});
    jumps.push_back({r.rate_down, SparseC(a * cd)});
    jumps.push_back({r.rate_up, SparseC(ad * c)});

    std::vector<int> charge(static_cast<std::size_t>(ms.total_dim()));
    for (int k = 0; k < ms.total_dim(); ++k)
        charge[static_cast<std::size_t>(k)] = k / n_c_dim + k % n_c_dim;
    return lindblad_superoperator(h, jumps, ms, std::move(charge));
}

}  // namespace omcool::fock
