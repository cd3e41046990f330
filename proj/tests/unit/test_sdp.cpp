#include "ntfforge/dsp.hpp"
#include "ntfforge/error.hpp"
#include "ntfforge/objective.hpp"
#include "ntfforge/sdp.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstring>

using namespace ntfforge;
using namespace ntfforge::sdp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

dsp::ImpulseResponse lowpass_impulse() {
    dsp::FilterSpec s;
    s.kind = dsp::FilterKind::LowpassButterworth;
    s.order = 1;
    s.bands_hz = {{0.0, 2000.0}};
    s.sample_rate_hz = 2.048e6;
    return dsp::impulse_response(s);
}

SdpProblem design_problem(const dsp::ImpulseResponse& h, int p, double gamma) {
    return SdpProblem(objective::reduce_objective(objective::build_q_matrix(h, p)), kyp::LmiSystem(p, gamma));
}

double min_eig(const MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

struct Kkt {
    double primal = 0.0;
    double dual = 0.0;
    double complementarity = 0.0;
    double min_x = 0.0;
    double min_z = 0.0;
};

// Residuals recomputed from scratch on the returned iterate.
Kkt kkt_residuals(const BlockSdp& prob, const BlockSdpResult& res) {
    Kkt k;
    VectorXd ax = VectorXd::Zero(prob.variable_count());
    double xz = 0.0;
    double x_norm = 0.0;
    double z_norm = 0.0;
    double c_norm = 0.0;
    k.min_x = 1e300;
    k.min_z = 1e300;
    for (int blk = 0; blk < prob.block_count(); ++blk) {
        const auto b = static_cast<std::size_t>(blk);
        MatrixXd z = prob.c[b];
        for (const Term& t : prob.terms[b]) {
            ax(t.var) += t.mat.dot(res.x[b]);
            t.mat.accumulate(z, -res.y(t.var));
        }
        k.dual = std::max(k.dual, (z - res.z[b]).norm());
        xz += (res.x[b].array() * res.z[b].array()).sum();
        x_norm += res.x[b].squaredNorm();
        z_norm += res.z[b].squaredNorm();
        c_norm += prob.c[b].squaredNorm();
        k.min_x = std::min(k.min_x, min_eig(res.x[b]));
        k.min_z = std::min(k.min_z, min_eig(res.z[b]));
    }
    k.primal = (ax - prob.b).norm() / (1.0 + prob.b.norm());
    k.dual /= 1.0 + std::sqrt(c_norm);
    k.complementarity = std::abs(xz) / (1.0 + std::sqrt(x_norm) * std::sqrt(z_norm));
    return k;
}

} // namespace

TEST_CASE("scalar SDP with a known optimum") {
    // maximize -y subject to [[y, 1], [1, y]] PSD; optimum y = 1.
    BlockSdp prob;
    MatrixXd c(2, 2);
    c << 0.0, 1.0, 1.0, 0.0;
    prob.c.push_back(c);
    SymSparse a;
    a.add(0, 0, -1.0);
    a.add(1, 1, -1.0);
    prob.terms.push_back({{0, a}});
    prob.b = VectorXd::Constant(1, -1.0);
    const auto res = solve_block_sdp(prob, {});
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.y(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.primal_obj == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(res.dual_obj == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("contradictory constraints are not reported optimal") {
    // y >= 0 and y <= -1.
    BlockSdp prob;
    prob.c.push_back(MatrixXd::Zero(1, 1));
    prob.c.push_back(MatrixXd::Constant(1, 1, -1.0));
    SymSparse lo;
    lo.add(0, 0, -1.0);
    SymSparse hi;
    hi.add(0, 0, 1.0);
    prob.terms.push_back({{0, lo}});
    prob.terms.push_back({{0, hi}});
    prob.b = VectorXd::Zero(1);
    const auto res = solve_block_sdp(prob, {});
    CHECK(res.status != SolveStatus::Optimal);
}

TEST_CASE("malformed problems and settings are rejected") {
    BlockSdp prob;
    prob.c.push_back(MatrixXd::Identity(2, 2));
    SymSparse bad;
    bad.add(0, 3, 1.0);
    prob.terms.push_back({{0, bad}});
    prob.b = VectorXd::Zero(1);
    CHECK_THROWS_AS(prob.validate(), Error);
    SolverSettings s;
    s.gap_tol = -1.0;
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("identity output filter gives the flat NTF") {
    const std::vector<double> one{1.0};
    const auto q = objective::build_q_matrix(one, 4);
    for (double gamma : {1.0, 1.5, 4.0}) {
        const SdpProblem problem(objective::reduce_objective(q), kyp::LmiSystem(4, gamma));
        const auto sol = solve(problem);
        REQUIRE(sol.status == SolveStatus::Optimal);
        const auto ntf = extract_ntf(sol, 4);
        REQUIRE(ntf.coeffs().size() == 5);
        CHECK(ntf.coeffs()[0] == 1.0);
        for (int k = 1; k <= 4; ++k) {
            CHECK(std::abs(ntf.coeffs()[static_cast<std::size_t>(k)]) < 1e-6);
        }
    }
}

TEST_CASE("toy problem with an inactive LMI lands on the stationary point") {
    objective::ReducedObjective obj;
    obj.quadratic = 2.0 * MatrixXd::Identity(2, 2);
    obj.linear = VectorXd(2);
    obj.linear << 2.0, 0.0;
    obj.constant = 1.0;
    const SdpProblem problem(obj, kyp::LmiSystem(2, 100.0));
    const auto sol = solve(problem);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.xi(0) == doctest::Approx(-0.5).epsilon(1e-6));
    CHECK(std::abs(sol.xi(1)) < 1e-6);
}

TEST_CASE("lowpass design converges quickly with optimality certificates") {
    const auto h = lowpass_impulse();
    const auto problem = design_problem(h, 12, 1.5);
    const auto t0 = std::chrono::steady_clock::now();
    const auto sol = solve(problem);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.duality_gap <= 1e-7);
    CHECK(seconds < 10.0);

    const auto ntf = extract_ntf(sol, 12);
    CHECK(ntf.coeffs().size() == 13);
    CHECK(ntf.coeffs()[0] == 1.0);

    const VectorXd x = sol.xi.head(12);
    const double recomputed = problem.constant + problem.linear.dot(x) + x.dot(problem.quadratic * x);
    CHECK(sol.objective_value == doctest::Approx(recomputed).epsilon(1e-9));

    double scale = 1.0;
    const auto block = to_block_sdp(problem, &scale);
    const auto res = solve_block_sdp(block, {});
    REQUIRE(res.status == SolveStatus::Optimal);
    const auto k = kkt_residuals(block, res);
    CHECK(k.primal <= 1e-6);
    CHECK(k.dual <= 1e-6);
    CHECK(k.complementarity <= 1e-6);
    CHECK(k.min_x >= -1e-6);
    CHECK(k.min_z >= -1e-6);
}

TEST_CASE("identical inputs give bit-identical solutions") {
    const auto h = lowpass_impulse();
    const auto problem = design_problem(h, 8, 1.5);
    const auto a = solve(problem);
    const auto b = solve(problem);
    REQUIRE(a.xi.size() == b.xi.size());
    CHECK(std::memcmp(a.xi.data(), b.xi.data(), sizeof(double) * static_cast<std::size_t>(a.xi.size())) == 0);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("optimal noise power does not increase with the order") {
    const auto h = lowpass_impulse();
    const SolverSettings settings;
    double previous = 1e300;
    for (int p : {2, 4, 6, 9, 13}) {
        const auto sol = solve(design_problem(h, p, 1.5), settings);
        REQUIRE(sol.status == SolveStatus::Optimal);
        CHECK(sol.objective_value <= previous * (1.0 + 2.0 * settings.gap_tol));
        previous = sol.objective_value;
    }
}

TEST_CASE("extraction refuses a non-optimal solution") {
    SdpSolution sol;
    sol.status = SolveStatus::MaxIterations;
    sol.xi = VectorXd::Zero(3);
    try {
        (void)extract_ntf(sol, 1);
        FAIL("expected an extraction error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Extraction);
    }
}

TEST_CASE("iteration limit is reported as such") {
    const auto problem = design_problem(lowpass_impulse(), 6, 1.5);
    SolverSettings s;
    s.max_iter = 2;
    const auto sol = solve(problem, s);
    CHECK(sol.status == SolveStatus::MaxIterations);
}
