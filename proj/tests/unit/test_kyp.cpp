#include "ntfforge/error.hpp"
#include "ntfforge/kyp.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

using namespace ntfforge;
using namespace ntfforge::kyp;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using std::numbers::pi;

namespace {

NtfFir random_ntf(std::mt19937& rng, int p, double spread = 0.5) {
    std::normal_distribution<double> nd(0.0, spread);
    std::vector<double> a(static_cast<std::size_t>(p + 1));
    a[0] = 1.0;
    for (int k = 1; k <= p; ++k) {
        a[static_cast<std::size_t>(k)] = nd(rng) / std::sqrt(static_cast<double>(k));
    }
    return NtfFir(a);
}

double max_eig(const MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

// Random well-conditioned change of state coordinates.
MatrixXd random_similarity(std::mt19937& rng, int p) {
    std::uniform_real_distribution<double> ud(-0.3, 0.3);
    MatrixXd t = MatrixXd::Identity(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
            t(i, j) += ud(rng);
        }
    }
    return t;
}

CanonicalRealization transform(const CanonicalRealization& r, const MatrixXd& t) {
    CanonicalRealization out;
    const MatrixXd ti = t.inverse();
    out.a = ti * r.a * t;
    out.b = ti * r.b;
    out.c = r.c * t;
    out.d = r.d;
    return out;
}

} // namespace

TEST_CASE("first-order realization is read off the coefficients") {
    const auto r = canonical_realization(NtfFir({1.0, -1.0}));
    REQUIRE(r.order() == 1);
    CHECK(r.a(0, 0) == 0.0);
    CHECK(r.b(0) == 1.0);
    CHECK(r.c(0) == -1.0);
    CHECK(r.d == 1.0);
}

TEST_CASE("realization with zero tail is the unit transfer function") {
    const auto r = canonical_realization(NtfFir({1.0, 0.0, 0.0}));
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> ud(0.0, 2.0 * pi);
    for (int k = 0; k < 16; ++k) {
        CHECK(std::abs(r.transfer(ud(rng)) - dsp::Complex{1.0, 0.0}) < 1e-15);
    }
}

TEST_CASE("realization reproduces the FIR response on random coefficient sets") {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> ud(0.0, 2.0 * pi);
    for (int trial = 0; trial < 100; ++trial) {
        const int p = 1 + trial % 20;
        const auto ntf = random_ntf(rng, p, 1.0);
        const auto r = canonical_realization(ntf);
        for (int k = 0; k < 64; ++k) {
            const double w = ud(rng);
            CHECK(std::abs(r.transfer(w) - ntf.response(w)) < 1e-10);
        }
    }
}

TEST_CASE("realization is nilpotent and controllable") {
    for (int p = 1; p <= 12; ++p) {
        const auto r = canonical_realization(NtfFir::unit(p));
        MatrixXd power = MatrixXd::Identity(p, p);
        for (int k = 0; k < p; ++k) {
            power = power * r.a;
        }
        CHECK(power.isZero(0.0));
        CHECK(r.controllable());
    }
}

TEST_CASE("zero order has no realization") {
    try {
        (void)canonical_realization(NtfFir::unit(0));
        FAIL("expected a degenerate order error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateOrder);
    }
}

TEST_CASE("symmetric vectorization is row-major over the upper triangle") {
    CHECK(sym_index(3, 0, 0) == 0);
    CHECK(sym_index(3, 0, 1) == 1);
    CHECK(sym_index(3, 0, 2) == 2);
    CHECK(sym_index(3, 1, 1) == 3);
    CHECK(sym_index(3, 1, 2) == 4);
    CHECK(sym_index(3, 2, 2) == 5);
    CHECK(sym_index(3, 2, 1) == 4);
    VectorXd v(6);
    v << 1, 2, 3, 4, 5, 6;
    const MatrixXd m = sym_unvec(v, 3);
    CHECK(m(2, 1) == 5.0);
    CHECK(sym_vec(m) == v);
}

TEST_CASE("first-order LMI matches the hand expansion") {
    const LmiSystem lmi(1, 1.5);
    CHECK(lmi.dimension() == 3);
    CHECK(lmi.variable_count() == 2);
    for (double a1 : {0.0, -0.7, 1.3}) {
        for (double p : {0.0, 0.5, 2.0}) {
            VectorXd xi(2);
            xi << a1, p;
            MatrixXd expected(3, 3);
            expected << -p, 0.0, a1, 0.0, p - 2.25, 1.0, a1, 1.0, -1.0;
            CHECK((lmi.evaluate(xi) - expected).cwiseAbs().maxCoeff() < 1e-15);
        }
    }
    VectorXd xi(2);
    xi << 0.0, 1.0;
    CHECK(max_eig(lmi.evaluate(xi)) <= 0.0);
}

TEST_CASE("LMI is affine in the decision vector") {
    // Dyadic values keep every sum exact, so the identity holds bit for bit.
    std::mt19937 rng(4);
    std::uniform_int_distribution<int> ui(-64, 64);
    for (int p : {1, 3, 6}) {
        const LmiSystem lmi(p, 1.5);
        for (int trial = 0; trial < 10; ++trial) {
            VectorXd xi(lmi.variable_count());
            VectorXd eta(lmi.variable_count());
            for (int i = 0; i < xi.size(); ++i) {
                xi(i) = ui(rng) / 16.0;
                eta(i) = ui(rng) / 16.0;
            }
            const VectorXd zero = VectorXd::Zero(xi.size());
            const MatrixXd d = lmi.evaluate(VectorXd(xi + eta)) - lmi.evaluate(xi) - lmi.evaluate(eta) + lmi.evaluate(zero);
            CHECK(d.isZero(0.0));
        }
    }
}

TEST_CASE("sparse LMI agrees with the dense bounded-real matrix") {
    std::mt19937 rng(6);
    std::normal_distribution<double> nd;
    for (int p : {1, 2, 5, 9}) {
        const auto ntf = random_ntf(rng, p);
        MatrixXd g(p, p);
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j) {
                g(i, j) = nd(rng);
            }
        }
        const MatrixXd pm = g * g.transpose();
        const LmiSystem lmi(p, 1.7);
        const MatrixXd dense = bounded_real_matrix(canonical_realization(ntf), pm, 1.7);
        CHECK((lmi.evaluate(ntf, pm) - dense).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + dense.cwiseAbs().maxCoeff()));
        const VectorXd xi = lmi.pack(ntf, pm);
        CHECK((lmi.evaluate(xi) - dense).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + dense.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("Schur complement agrees with the big matrix on randomized trials") {
    std::mt19937 rng(8);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    int feasible = 0;
    int infeasible = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 1 + trial % 6;
        const auto ntf = random_ntf(rng, p);
        const double peak = peak_gain(ntf);
        auto r = transform(canonical_realization(ntf), random_similarity(rng, p));
        MatrixXd pm;
        double gamma = 0.0;
        if (trial % 2 == 0) {
            gamma = peak / 0.8;
            const auto found = find_certificate(ntf, gamma);
            REQUIRE(found.status == sdp::SolveStatus::Optimal);
            const MatrixXd t = random_similarity(rng, p);
            r = transform(canonical_realization(ntf), t);
            pm = t.transpose() * found.p_matrix * t;
        } else {
            MatrixXd g(p, p);
            for (int i = 0; i < p; ++i) {
                for (int j = 0; j < p; ++j) {
                    g(i, j) = nd(rng);
                }
            }
            pm = g * g.transpose();
            gamma = 1.0 + 3.0 * ud(rng);
        }
        const auto [big, reduced] = schur_equivalence_check(r, pm, gamma);
        CHECK(big == reduced);
        (big ? feasible : infeasible) += 1;
    }
    CHECK(feasible >= 50);
    CHECK(infeasible >= 50);
}

TEST_CASE("Schur check reference cases") {
    CanonicalRealization r = canonical_realization(NtfFir({1.0, 0.0, 0.0}));
    r.d = 0.5;
    const auto [big0, red0] = schur_equivalence_check(r, MatrixXd::Zero(2, 2), 100.0);
    CHECK(big0);
    CHECK(red0);
    const auto r1 = canonical_realization(NtfFir({1.0, 0.0}));
    const auto [big1, red1] = schur_equivalence_check(r1, MatrixXd::Identity(1, 1), 1.5);
    CHECK(big1);
    CHECK(red1);
}

TEST_CASE("LMI feasibility coincides with the grid gain bound") {
    std::mt19937 rng(10);
    std::uniform_int_distribution<int> coin(0, 1);
    int below = 0;
    int above = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 1 + trial % 10;
        const auto ntf = random_ntf(rng, p);
        const double peak = peak_gain(ntf);
        const bool want_feasible = coin(rng) == 1;
        const double gamma = want_feasible ? peak * 1.05 : peak * 0.95;
        const auto found = find_certificate(ntf, gamma);
        REQUIRE(found.status == sdp::SolveStatus::Optimal);
        const bool lmi_ok = found.t <= kLmiTol;
        CHECK(lmi_ok == want_feasible);
        if (lmi_ok) {
            const auto cert = verify_bounded_real(ntf, gamma);
            CHECK(cert.lmi_satisfied());
            CHECK(grid_max_gain(ntf, kLeeGridPoints) <= gamma * (1.0 + kGridSlack));
            ++below;
        } else {
            CHECK_THROWS_AS((void)verify_bounded_real(ntf, gamma), Error);
            ++above;
        }
    }
    CHECK(below > 10);
    CHECK(above > 10);
}

TEST_CASE("gain bound implies a certificate at 0.9 gamma") {
    std::mt19937 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const auto ntf = random_ntf(rng, 2 + trial % 8);
        const double gamma = grid_max_gain(ntf) / 0.9;
        CHECK_NOTHROW((void)verify_bounded_real(ntf, gamma));
    }
}

TEST_CASE("bounded-real reference cases") {
    const NtfFir unit({1.0});
    const auto c0 = verify_bounded_real(unit, 1.0);
    CHECK(c0.grid_max == doctest::Approx(1.0));
    const NtfFir diff({1.0, -1.0});
    CHECK(grid_max_gain(diff) == doctest::Approx(2.0));
    try {
        (void)verify_bounded_real(diff, 1.9);
        FAIL("expected a bound violation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BoundViolation);
        CHECK(std::string(e.what()).find("grid max") != std::string::npos);
    }
    const auto found = find_certificate(diff, 2.0 + 1e-6);
    CHECK(found.status == sdp::SolveStatus::Optimal);
    CHECK(found.t <= kLmiTol);
}

TEST_CASE("supplied certificates are checked, not trusted") {
    const NtfFir ntf({1.0, -0.5, 0.1});
    const auto good = verify_bounded_real(ntf, 1.8);
    CHECK_NOTHROW((void)verify_bounded_real(ntf, 1.8, good.p_matrix));
    CHECK_THROWS_AS((void)verify_bounded_real(ntf, 1.8, MatrixXd::Zero(2, 2)), Error);
}

TEST_CASE("peak gain refines the grid maximum") {
    const NtfFir ntf({1.0, 0.3, -0.4});
    const double grid = grid_max_gain(ntf, 64);
    const double refined = peak_gain(ntf, 64);
    CHECK(refined >= grid);
    CHECK(refined == doctest::Approx(grid_max_gain(ntf, 1 << 20)).epsilon(1e-9));
}
