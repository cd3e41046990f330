#include "ntfforge/dsp.hpp"
#include "ntfforge/error.hpp"
#include "ntfforge/objective.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

using namespace ntfforge;
using namespace ntfforge::objective;
using std::numbers::pi;

namespace {

// Q(i, j) = sum_n h(n - i) h(n - j), summed over every n where both exist.
Eigen::MatrixXd brute_q(const std::vector<double>& h, int p) {
    const int m = static_cast<int>(h.size()) - 1;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(p + 1, p + 1);
    for (int i = 0; i <= p; ++i) {
        for (int j = 0; j <= p; ++j) {
            for (int n = 0; n <= m + p; ++n) {
                const int u = n - i;
                const int v = n - j;
                if (u >= 0 && u <= m && v >= 0 && v <= m) {
                    q(i, j) += h[static_cast<std::size_t>(u)] * h[static_cast<std::size_t>(v)];
                }
            }
        }
    }
    return q;
}

// Stable random filter with 1..4 real or complex-pair poles of radius below 0.9.
dsp::RationalFilter random_filter(std::mt19937& rng) {
    std::uniform_real_distribution<double> radius(0.05, 0.9);
    std::uniform_real_distribution<double> angle(0.0, pi);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::vector<double> den{1.0};
    const int sections = 1 + static_cast<int>(rng() % 2);
    for (int s = 0; s < sections; ++s) {
        const double r = radius(rng);
        const double th = angle(rng);
        const std::vector<double> quad{1.0, -2.0 * r * std::cos(th), r * r};
        den = dsp::poly_multiply(den, quad);
    }
    std::vector<double> num(3);
    for (double& v : num) {
        v = coef(rng);
    }
    num[0] = 1.0;
    return dsp::RationalFilter::from_coefficients(num, den);
}

std::vector<double> random_ntf(std::mt19937& rng, int p) {
    std::normal_distribution<double> nd(0.0, 0.7);
    std::vector<double> a(static_cast<std::size_t>(p + 1));
    a[0] = 1.0;
    for (int k = 1; k <= p; ++k) {
        a[static_cast<std::size_t>(k)] = nd(rng);
    }
    return a;
}

} // namespace

TEST_CASE("Q matrix matches the brute-force autocorrelation") {
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> h(static_cast<std::size_t>(1 + trial % 9));
        for (double& v : h) {
            v = nd(rng);
        }
        const int p = 1 + trial % 7;
        const auto q = build_q_matrix(h, p);
        const auto ref = brute_q(h, p);
        CHECK(q.order() == p);
        CHECK((q.entries - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("Q matrix is exactly Toeplitz") {
    const std::vector<double> h{0.3, -1.2, 0.7, 0.05, 2.0};
    const auto q = build_q_matrix(h, 6);
    for (int i = 0; i <= 6; ++i) {
        for (int j = 0; j <= 6; ++j) {
            const double expected = q.first_row[static_cast<std::size_t>(std::abs(i - j))];
            CHECK(std::memcmp(&q.entries(i, j), &expected, sizeof(double)) == 0);
        }
    }
}

TEST_CASE("Q matrix is positive semidefinite for random filters") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto f = random_filter(rng);
        const auto h = dsp::impulse_response(f);
        const int p = 1 + trial % 30;
        const auto q = build_q_matrix(h, p);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.entries);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12 * q.first_row[0]);
    }
}

TEST_CASE("Q matrix rejects an all-zero response and a zero order") {
    const std::vector<double> zero(5, 0.0);
    try {
        (void)build_q_matrix(zero, 3);
        FAIL("expected a degenerate filter error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateFilter);
    }
    const std::vector<double> h{1.0, 0.5};
    try {
        (void)build_q_matrix(h, 0);
        FAIL("expected an invalid spec error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidSpec);
    }
}

TEST_CASE("reduced objective equals the full quadratic form with a0 = 1") {
    std::mt19937 rng(9);
    std::normal_distribution<double> nd;
    const std::vector<double> h{0.5, 0.25, -0.125, 0.3};
    const auto q = build_q_matrix(h, 5);
    const auto r = reduce_objective(q);
    CHECK(r.constant == q.first_row[0]);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd x(5);
        std::vector<double> a{1.0};
        for (int k = 0; k < 5; ++k) {
            x(k) = nd(rng);
            a.push_back(x(k));
        }
        CHECK(r.evaluate(x) == doctest::Approx(quadratic_form(q, a)).epsilon(1e-12));
    }
}

TEST_CASE("reduced minimizer is not beaten on a brute-force grid") {
    const std::vector<double> h{1.0, 0.8, 0.3};
    const auto r = reduce_objective(build_q_matrix(h, 2));
    const Eigen::VectorXd x_star = -0.5 * r.quadratic.ldlt().solve(r.linear);
    const double best = r.evaluate(x_star);
    double grid_best = 1e300;
    for (int i = -200; i <= 200; ++i) {
        for (int j = -200; j <= 200; ++j) {
            Eigen::VectorXd x(2);
            x << 0.01 * i, 0.01 * j;
            grid_best = std::min(grid_best, r.evaluate(x));
        }
    }
    CHECK(best <= grid_best + 1e-12);
    CHECK(grid_best - best < 1e-3);
}

TEST_CASE("quadrature noise power equals the closed form on random pairs") {
    std::mt19937 rng(21);
    const NoiseBudget budget;
    const auto grid = dsp::FrequencyGrid::uniform(4096);
    for (int trial = 0; trial < 50; ++trial) {
        const auto f = random_filter(rng);
        const int p = 1 + trial % 16;
        const auto a = random_ntf(rng, p);
        const auto q = build_q_matrix(dsp::impulse_response(f), p);
        const double closed = sigma2_h_fir(q, a, budget);
        const std::vector<double> one{1.0};
        const double quad = sigma2_h(a, one, f, budget, grid);
        CHECK(quad == doctest::Approx(closed).epsilon(1e-6));
    }
}

TEST_CASE("closed form equals quadrature for a sharp bandpass filter") {
    dsp::FilterSpec s;
    s.kind = dsp::FilterKind::BandpassButterworth;
    s.order = 8;
    s.bands_hz = {{800.0, 1200.0}};
    s.sample_rate_hz = 51200.0;
    const auto f = dsp::design_filter(s);
    const std::vector<double> a{1.0, -1.8, 0.9};
    const auto q = build_q_matrix(dsp::impulse_response(f), 2);
    const NoiseBudget budget;
    const auto check = sigma2_h_checked(a, std::vector<double>{1.0}, f, budget, dsp::FrequencyGrid::uniform(1 << 15));
    CHECK(check.converged());
    CHECK(check.refined == doctest::Approx(sigma2_h_fir(q, a, budget)).epsilon(1e-6));
}

TEST_CASE("in-band noise of (1 - z^-1)^P follows the small-angle formula") {
    const NoiseBudget budget;
    const double osr = 1024.0;
    for (int p = 1; p <= 3; ++p) {
        std::vector<double> a{1.0};
        for (int k = 0; k < p; ++k) {
            a = dsp::poly_multiply(a, std::vector<double>{1.0, -1.0});
        }
        const double got = sigma2_inband(a, std::vector<double>{1.0}, {{0.0, pi / osr}}, budget);
        const double formula =
            budget.sigma2_eps() * std::pow(pi, 2.0 * p) / ((2.0 * p + 1.0) * std::pow(osr, 2.0 * p + 1.0));
        CHECK(got == doctest::Approx(formula).epsilon(0.01));
    }
}

TEST_CASE("in-band noise of a flat NTF is the band fraction of the total") {
    const NoiseBudget budget;
    const double got = sigma2_inband(std::vector<double>{1.0}, std::vector<double>{1.0},
                                     {{0.0, pi / 4.0}, {pi / 2.0, pi}}, budget);
    CHECK(got == doctest::Approx(budget.sigma2_eps() * 0.75).epsilon(1e-12));
    CHECK_THROWS_AS((void)sigma2_inband(std::vector<double>{1.0}, std::vector<double>{1.0}, {}, budget), Error);
}

TEST_CASE("brick-wall weight reproduces the in-band integral") {
    const NoiseBudget budget;
    const std::vector<double> a{1.0, -2.0, 1.0};
    const double edge = pi / 16.0;
    const auto grid = dsp::FrequencyGrid::uniform((1 << 16) + 1);
    std::vector<double> weight(grid.count());
    for (std::size_t k = 0; k < grid.count(); ++k) {
        weight[k] = grid.omegas[k] <= edge ? 1.0 : 0.0;
    }
    const double got = sigma2_weighted(a, std::vector<double>{1.0}, weight, budget, grid);
    const double ref = sigma2_inband(a, std::vector<double>{1.0}, {{0.0, edge}}, budget);
    CHECK(got == doctest::Approx(ref).epsilon(1e-3));
}

TEST_CASE("trapezoid integrates a cosine series exactly") {
    const auto grid = dsp::FrequencyGrid::uniform(257);
    std::vector<double> v(grid.count());
    for (std::size_t k = 0; k < grid.count(); ++k) {
        v[k] = 2.0 + std::cos(3.0 * grid.omegas[k]);
    }
    CHECK(trapezoid(v, grid) == doctest::Approx(2.0 * pi).epsilon(1e-13));
}

TEST_CASE("reference Q matrices") {
    const auto q1 = build_q_matrix(std::vector<double>{1.0}, 2);
    CHECK(q1.entries.isApprox(Eigen::MatrixXd::Identity(3, 3)));
    const auto q2 = build_q_matrix(std::vector<double>{1.0, 1.0}, 1);
    CHECK(q2.entries(0, 0) == 2.0);
    CHECK(q2.entries(0, 1) == 1.0);
    CHECK(q2.entries(1, 1) == 2.0);
    const auto q3 = build_q_matrix(std::vector<double>{1.0, 0.5, 0.25}, 2);
    CHECK(q3.first_row[0] == doctest::Approx(1.3125));
    CHECK(q3.first_row[1] == doctest::Approx(0.625));
    CHECK(q3.first_row[2] == doctest::Approx(0.25));
}

TEST_CASE("reference reductions") {
    const auto r1 = reduce_objective(build_q_matrix(std::vector<double>{1.0}, 2));
    CHECK(r1.quadratic.isApprox(Eigen::MatrixXd::Identity(2, 2)));
    CHECK(r1.linear.norm() == 0.0);
    CHECK(r1.constant == 1.0);
    const auto r2 = reduce_objective(build_q_matrix(std::vector<double>{1.0, 1.0}, 1));
    CHECK(r2.quadratic(0, 0) == 2.0);
    CHECK(r2.linear(0) == 2.0);
    CHECK(r2.constant == 2.0);
}

TEST_CASE("reference noise powers") {
    const NoiseBudget budget;
    const std::vector<double> one{1.0};
    const std::vector<double> diff{1.0, -1.0};
    const auto unit = dsp::RationalFilter::identity();
    CHECK(sigma2_h(one, one, unit, budget, dsp::FrequencyGrid::uniform()) == doctest::Approx(1.0 / 3.0));
    CHECK(sigma2_inband(one, one, {{0.0, pi}}, budget) == doctest::Approx(1.0 / 3.0));
    CHECK(sigma2_inband(diff, one, {{0.0, pi}}, budget) == doctest::Approx(2.0 / 3.0));
    const auto g = dsp::FrequencyGrid::uniform(3);
    const auto flat = merit_integrand(one, one, unit, g);
    for (double v : flat) {
        CHECK(v == 1.0);
    }
    CHECK(merit_integrand(diff, one, unit, g).back() == doctest::Approx(4.0));
}

TEST_CASE("first-order brick-wall in-band noise matches the textbook approximation") {
    const NoiseBudget budget;
    const double osr = 1024.0;
    const auto grid = dsp::FrequencyGrid::uniform(1024 * 64 + 1);
    std::vector<double> weight(grid.count());
    for (std::size_t k = 0; k < grid.count(); ++k) {
        weight[k] = grid.omegas[k] <= pi / osr + 1e-15 ? 1.0 : 0.0;
    }
    const double got = sigma2_weighted(std::vector<double>{1.0, -1.0}, std::vector<double>{1.0}, weight, budget, grid);
    const double formula = budget.sigma2_eps() * pi * pi / (3.0 * osr * osr * osr);
    CHECK(got == doctest::Approx(formula).epsilon(0.01));
}
