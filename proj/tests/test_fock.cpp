#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "omcool/fock.hpp"

using namespace omcool;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("annihilation operator entries and bounds", "[fock]") {
    const auto a = fock::annihilation(2).toDense();
    CHECK(a(0, 0) == fock::complexd(0, 0));
    CHECK(a(0, 1) == fock::complexd(1, 0));
    CHECK(a(1, 0) == fock::complexd(0, 0));
    CHECK(a(1, 1) == fock::complexd(0, 0));

    CHECK_THROWS_AS(fock::annihilation(1), std::invalid_argument);

    const auto n = (fock::annihilation(4).adjoint() * fock::annihilation(4)).eval();
    const Eigen::MatrixXcd nd = n.toDense();
    for (int i = 0; i < 4; ++i) {
        CHECK_THAT(nd(i, i).real(), WithinAbs(static_cast<double>(i), 1e-15));
        for (int j = 0; j < 4; ++j)
            if (i != j) CHECK(std::abs(nd(i, j)) == 0.0);
    }
}

TEST_CASE("truncated commutator picks up the top-level artifact", "[fock]") {
    const int dim = 7;
    const auto a = fock::annihilation(dim);
    const Eigen::MatrixXcd comm = (a * a.adjoint() - a.adjoint() * a).toDense();
    for (int i = 0; i < dim - 1; ++i)
        CHECK_THAT(comm(i, i).real(), WithinAbs(1.0, 1e-14));
    CHECK_THAT(comm(dim - 1, dim - 1).real(), WithinAbs(1.0 - dim, 1e-14));
}

TEST_CASE("hamiltonian is hermitian and diagonal without coupling", "[fock]") {
    SystemParams p;
    p.delta = 1.3;
    p.omega_c = 1.0;
    p.g = 0;
    const fock::TruncationSpec t{3, 2, 4};
    const Eigen::MatrixXcd h = fock::hamiltonian(p, t).toDense();

    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    for (int ia = 0; ia < 3; ++ia)
        for (int ib = 0; ib < 2; ++ib)
            for (int ic = 0; ic < 4; ++ic) {
                const int k = (ia * 2 + ib) * 4 + ic;
                CHECK_THAT(h(k, k).real(),
                           WithinAbs(p.delta * ia + p.omega_c * ic, 1e-14));
            }
    CHECK_THAT(h.cwiseAbs().sum(),
               WithinRel(h.diagonal().cwiseAbs().sum(), 1e-14));
}

namespace {

// Independent dense construction: triple loop over Fock indices with the
// explicit matrix elements of delta n_a + omega_c n_c
// + g (a^dag a + b^dag b + a^dag b + b^dag a)(c + c^dag).
Eigen::MatrixXcd hamiltonian_by_loop(const SystemParams& p,
                                     const fock::TruncationSpec& t) {
    const int na = t.n_a_dim, nb = t.n_b_dim, nc = t.n_c_dim;
    const int d = na * nb * nc;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
    auto idx = [&](int ia, int ib, int ic) { return (ia * nb + ib) * nc + ic; };
    for (int ja = 0; ja < na; ++ja)
        for (int jb = 0; jb < nb; ++jb)
            for (int jc = 0; jc < nc; ++jc) {
                const int col = idx(ja, jb, jc);
                h(col, col) += p.delta * ja + p.omega_c * jc;
                // optical factor applied to |ja, jb>, position factor to |jc>
                struct Opt { int ia, ib; double amp; };
                std::vector<Opt> opts;
                opts.push_back({ja, jb, static_cast<double>(ja + jb)});
                if (ja + 1 < na && jb - 1 >= 0)
                    opts.push_back({ja + 1, jb - 1,
                                    std::sqrt((ja + 1.0) * jb)});
                if (ja - 1 >= 0 && jb + 1 < nb)
                    opts.push_back({ja - 1, jb + 1,
                                    std::sqrt(ja * (jb + 1.0))});
                for (const auto& o : opts) {
                    if (jc + 1 < nc)
                        h(idx(o.ia, o.ib, jc + 1), col) +=
                            p.g * o.amp * std::sqrt(jc + 1.0);
                    if (jc - 1 >= 0)
                        h(idx(o.ia, o.ib, jc - 1), col) +=
                            p.g * o.amp * std::sqrt(static_cast<double>(jc));
                }
            }
    return h;
}

}  // namespace

TEST_CASE("hamiltonian matches an independently assembled dense construction",
          "[fock]") {
    SystemParams p;
    p.kappa = 0.1;
    p.gamma = 0.01;
    p.g = 0.006;
    p.n_b = 1;
    p.n_c = 1;
    const fock::TruncationSpec t{6, 6, 6};
    const Eigen::MatrixXcd h = fock::hamiltonian(p, t).toDense();
    const Eigen::MatrixXcd href = hamiltonian_by_loop(p, t);
    CHECK((h - href).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("expectation values against simple states", "[fock]") {
    const int dim = 12;
    const auto n_op = fock::number_operator(dim);
    Eigen::MatrixXcd vacuum = Eigen::MatrixXcd::Zero(dim, dim);
    vacuum(0, 0) = 1.0;
    CHECK(fock::expectation(vacuum, n_op) == fock::complexd(0, 0));
    CHECK_THAT(fock::expectation(vacuum, fock::identity(dim)).real(),
               WithinAbs(1.0, 1e-15));

    Eigen::MatrixXcd small = Eigen::MatrixXcd::Zero(3, 3);
    CHECK_THROWS_AS(fock::expectation(small, n_op), std::invalid_argument);
}

TEST_CASE("truncated thermal state mean follows the geometric series", "[fock]") {
    // frozen partial-sum oracles
    CHECK_THAT(fock::truncated_thermal_mean(1.0, 40),
               WithinRel(0.99999999996362, 1e-10));
    CHECK_THAT(fock::truncated_thermal_mean(1.0, 6),
               WithinRel(0.904761904761905, 1e-12));
    CHECK_THAT(fock::truncated_thermal_mean(1.0, 8),
               WithinRel(0.968627450980392, 1e-12));

    const auto rho = fock::thermal_state(1.0, 40);
    CHECK_THAT(fock::expectation(rho, fock::number_operator(40)).real(),
               WithinAbs(1.0, 1e-6));
    CHECK_THAT(rho.trace().real(), WithinAbs(1.0, 1e-14));
}

TEST_CASE("truncation leakage of thermal states", "[fock]") {
    fock::ModeSpace one{{6}, {"c"}};
    auto leak = fock::truncation_check(fock::thermal_state(1.0, 6), one);
    CHECK_THAT(leak[0], WithinRel(1.0 / 63.0, 1e-12));  // ~1.6e-2, flagged
    CHECK(leak[0] > fock::truncation_leak_warn);

    fock::ModeSpace twelve{{12}, {"c"}};
    leak = fock::truncation_check(fock::thermal_state(1.0, 12), twelve);
    CHECK_THAT(leak[0], WithinRel(1.0 / 4095.0, 1e-12));  // ~2.4e-4, fine
    CHECK(leak[0] < fock::truncation_leak_warn);

    // vacuum leaks nothing anywhere
    const fock::TruncationSpec t{3, 3, 3};
    const auto ms = fock::mode_space(t);
    Eigen::MatrixXcd vac = Eigen::MatrixXcd::Zero(27, 27);
    vac(0, 0) = 1.0;
    for (double v : fock::truncation_check(vac, ms)) CHECK(v == 0.0);
}

TEST_CASE("mode occupation agrees with embedded number operators", "[fock]") {
    const fock::TruncationSpec t{3, 4, 2};
    const auto ms = fock::mode_space(t);
    const int d = ms.total_dim();

    // random diagonal density matrix
    Eigen::VectorXd pops = Eigen::VectorXd::Zero(d);
    unsigned long long s = 12345;
    for (int k = 0; k < d; ++k) {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        pops(k) = static_cast<double>((s >> 11) % 1000) + 1.0;
    }
    pops /= pops.sum();
    const Eigen::MatrixXcd rho = pops.cast<fock::complexd>().asDiagonal();

    for (std::size_t mode = 0; mode < 3; ++mode) {
        const auto n_emb =
            fock::embed(ms, mode, fock::number_operator(ms.dims[mode]));
        CHECK_THAT(fock::mode_occupation(rho, ms, mode),
                   WithinRel(fock::expectation(rho, n_emb).real(), 1e-12));
    }
}

TEST_CASE("truncation spec enforces the dimension limit", "[fock]") {
    fock::TruncationSpec t{20, 20, 20};
    CHECK_THROWS_WITH(t.check(), Catch::Matchers::ContainsSubstring("8000"));
    fock::TruncationSpec tiny{1, 4, 4};
    CHECK_THROWS_AS(tiny.check(), std::invalid_argument);
}

TEST_CASE("default truncation heuristic", "[fock]") {
    SystemParams p;
    p.n_b = 1;
    p.n_c = 1;
    // 5 quanta of headroom per unit of occupation, before the global cap
    auto t = fock::default_truncation(p, 2000);
    CHECK(t.n_a_dim == 6);
    CHECK(t.n_b_dim == 10);
    CHECK(t.n_c_dim == 10);

    // the default cap shrinks the largest modes until the product fits
    t = fock::default_truncation(p);
    CHECK(t.n_a_dim >= 6);
    CHECK(t.n_b_dim >= 8);
    CHECK(t.n_c_dim >= 8);
    CHECK(t.total_dim() <= 512);

    p.n_b = 1e8;  // enormous occupations collapse to the cap, not a hang
    t = fock::default_truncation(p);
    CHECK(t.total_dim() <= 512);
}
