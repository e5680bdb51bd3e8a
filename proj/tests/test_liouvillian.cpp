#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <complex>

#include "omcool/liouvillian.hpp"
#include "omcool/rng.hpp"

using namespace omcool;
using Catch::Matchers::WithinAbs;
using complexd = std::complex<double>;

namespace {

SystemParams fig3_params() {
    SystemParams p;
    p.kappa = 0.1;
    p.gamma = 0.01;
    p.g = 0.006;
    p.n_b = 1.0;
    p.n_c = 1.0;
    return p;
}

Eigen::MatrixXcd random_matrix(int d, rng::SplitMix64& gen) {
    Eigen::MatrixXcd m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            m(i, j) = complexd(2.0 * gen.uniform() - 1.0, 2.0 * gen.uniform() - 1.0);
    return m;
}

Eigen::MatrixXcd random_hermitian(int d, rng::SplitMix64& gen) {
    const Eigen::MatrixXcd m = random_matrix(d, gen);
    return 0.5 * (m + m.adjoint());
}

Eigen::MatrixXcd apply_superop(const fock::Superoperator& l,
                               const Eigen::MatrixXcd& rho) {
    return fock::unvec_density(l.matrix * fock::vec_density(rho), l.dim());
}

// Direct dense evaluation of the master equation, written independently of
// the vectorized builder: -i[H, rho] + sum_k rate (2 x rho x^dag - {x^dag x, rho}).
Eigen::MatrixXcd dense_master_equation(const Eigen::MatrixXcd& h,
                                       const std::vector<std::pair<double, Eigen::MatrixXcd>>& jumps,
                                       const Eigen::MatrixXcd& rho) {
    const complexd i_unit(0, 1);
    Eigen::MatrixXcd out = -i_unit * (h * rho - rho * h);
    for (const auto& [rate, x] : jumps) {
        const Eigen::MatrixXcd xdx = x.adjoint() * x;
        out += rate * (2.0 * x * rho * x.adjoint() - xdx * rho - rho * xdx);
    }
    return out;
}

// dense kron, independent of the sparse helper
Eigen::MatrixXcd dkron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Eigen::MatrixXcd dense_ladder(int dim) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
    for (int k = 1; k < dim; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    return a;
}

}  // namespace

TEST_CASE("full liouvillian annihilates the trace", "[liouvillian]") {
    const auto p = fig3_params();
    const fock::TruncationSpec t{3, 3, 4};
    const auto l = fock::liouvillian_full(p, t);
    rng::SplitMix64 gen(31);
    for (int k = 0; k < 20; ++k) {
        const auto rho = random_hermitian(l.dim(), gen);
        CHECK(std::abs(apply_superop(l, rho).trace()) <= 1e-12 * rho.norm());
    }
}

TEST_CASE("full liouvillian action matches the operator-level master equation",
          "[liouvillian]") {
    const auto p = fig3_params();
    const fock::TruncationSpec t{3, 4, 3};
    const auto l = fock::liouvillian_full(p, t);
    const int d = l.dim();

    // independent dense assembly of H and the jump list
    const Eigen::MatrixXcd ia = Eigen::MatrixXcd::Identity(3, 3);
    const Eigen::MatrixXcd ib = Eigen::MatrixXcd::Identity(4, 4);
    const Eigen::MatrixXcd ic = Eigen::MatrixXcd::Identity(3, 3);
    const Eigen::MatrixXcd a = dkron(dkron(dense_ladder(3), ib), ic);
    const Eigen::MatrixXcd b = dkron(dkron(ia, dense_ladder(4)), ic);
    const Eigen::MatrixXcd c = dkron(dkron(ia, ib), dense_ladder(3));
    const Eigen::MatrixXcd opt = (a + b).adjoint() * (a + b);
    const Eigen::MatrixXcd h = p.delta * a.adjoint() * a +
                               p.omega_c * c.adjoint() * c +
                               p.g * opt * (c + c.adjoint());
    std::vector<std::pair<double, Eigen::MatrixXcd>> jumps = {
        {p.kappa, a},
        {(1 + p.n_b) * p.kappa, b},
        {p.n_b * p.kappa, b.adjoint()},
        {(1 + p.n_c) * p.gamma, c},
        {p.n_c * p.gamma, c.adjoint()},
    };

    rng::SplitMix64 gen(32);
    for (int k = 0; k < 5; ++k) {
        const auto rho = random_hermitian(d, gen);
        const Eigen::MatrixXcd via_superop = apply_superop(l, rho);
        const Eigen::MatrixXcd direct = dense_master_equation(h, jumps, rho);
        CHECK((via_superop - direct).cwiseAbs().maxCoeff() <=
              1e-12 * direct.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("reduced liouvillian action matches its operator-level form",
          "[liouvillian]") {
    const auto p = fig3_params();
    const auto l = fock::liouvillian_reduced(p, 4, 5);
    const int d = l.dim();

    const auto r = meanfield::rates(p);
    const Eigen::MatrixXcd ia = Eigen::MatrixXcd::Identity(4, 4);
    const Eigen::MatrixXcd ic = Eigen::MatrixXcd::Identity(5, 5);
    const Eigen::MatrixXcd a = dkron(dense_ladder(4), ic);
    const Eigen::MatrixXcd c = dkron(ia, dense_ladder(5));
    const Eigen::MatrixXcd h =
        p.delta * a.adjoint() * a + p.omega_c * c.adjoint() * c;
    std::vector<std::pair<double, Eigen::MatrixXcd>> jumps = {
        {p.kappa, a},
        {(1 + r.n_c_tilde) * p.gamma, c},
        {r.n_c_tilde * p.gamma, c.adjoint()},
        {r.rate_down, a * c.adjoint()},
        {r.rate_up, a.adjoint() * c},
    };

    rng::SplitMix64 gen(33);
    for (int k = 0; k < 5; ++k) {
        const auto rho = random_hermitian(d, gen);
        const Eigen::MatrixXcd via_superop = apply_superop(l, rho);
        const Eigen::MatrixXcd direct = dense_master_equation(h, jumps, rho);
        CHECK((via_superop - direct).cwiseAbs().maxCoeff() <=
              1e-12 * direct.cwiseAbs().maxCoeff());
        CHECK(std::abs(via_superop.trace()) <= 1e-12 * rho.norm());
    }
}

TEST_CASE("liouvillians preserve hermiticity", "[liouvillian]") {
    const auto p = fig3_params();
    const auto lf = fock::liouvillian_full(p, {3, 3, 3});
    const auto lr = fock::liouvillian_reduced(p, 4, 4);
    rng::SplitMix64 gen(34);
    for (int k = 0; k < 10; ++k) {
        const auto rho = random_matrix(lf.dim(), gen);
        const Eigen::MatrixXcd lhs = apply_superop(lf, rho.adjoint());
        const Eigen::MatrixXcd rhs = apply_superop(lf, rho).adjoint();
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rho.norm());
    }
    for (int k = 0; k < 10; ++k) {
        const auto rho = random_matrix(lr.dim(), gen);
        const Eigen::MatrixXcd lhs = apply_superop(lr, rho.adjoint());
        const Eigen::MatrixXcd rhs = apply_superop(lr, rho).adjoint();
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rho.norm());
    }
}

TEST_CASE("vacuum is dark for the undriven dissipative dynamics", "[liouvillian]") {
    SystemParams p = fig3_params();
    p.g = 0;
    p.n_b = 0;
    p.n_c = 0;
    const auto l = fock::liouvillian_full(p, {3, 3, 3});
    Eigen::MatrixXcd vac = Eigen::MatrixXcd::Zero(27, 27);
    vac(0, 0) = 1.0;
    CHECK(apply_superop(l, vac).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("oversized vectorized spaces are refused with the attempted size",
          "[liouvillian]") {
    const auto p = fig3_params();
    CHECK_THROWS_WITH(fock::liouvillian_full(p, {16, 16, 16}),
                      Catch::Matchers::ContainsSubstring("4096"));
    CHECK_THROWS_WITH(fock::liouvillian_reduced(p, 40, 40),
                      Catch::Matchers::ContainsSubstring("1600"));
}

TEST_CASE("a wrong declared charge is rejected at build time", "[liouvillian]") {
    const auto p = fig3_params();
    const fock::TruncationSpec t{3, 3, 3};
    const auto ms = fock::mode_space(t);
    const auto a = fock::embed(ms, 0, fock::annihilation(3));
    // n_a alone is not conserved by the optical exchange in H
    std::vector<int> bogus(27);
    for (int k = 0; k < 27; ++k) bogus[k] = k / 9;
    CHECK_THROWS_AS(fock::lindblad_superoperator(fock::hamiltonian(p, t),
                                                 {{p.kappa, a}}, ms, bogus),
                    std::logic_error);
}

TEST_CASE("vectorization convention is column stacking", "[liouvillian]") {
    Eigen::MatrixXcd rho(2, 2);
    rho << complexd(1, 0), complexd(2, 0), complexd(3, 0), complexd(4, 0);
    const Eigen::VectorXcd v = fock::vec_density(rho);
    CHECK(v(0) == complexd(1, 0));  // (0,0)
    CHECK(v(1) == complexd(3, 0));  // (1,0): columns stacked
    CHECK(v(2) == complexd(2, 0));
    CHECK(v(3) == complexd(4, 0));
    CHECK((fock::unvec_density(v, 2) - rho).cwiseAbs().maxCoeff() == 0.0);
}
