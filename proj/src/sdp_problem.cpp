#include "ntfforge/error.hpp"
#include "ntfforge/sdp.hpp"

#include <algorithm>
#include <cmath>

namespace ntfforge::sdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

SdpProblem::SdpProblem(const objective::ReducedObjective& objective, kyp::LmiSystem lmi_system)
    : quadratic(objective.quadratic), linear(objective.linear), constant(objective.constant),
      lmi(std::move(lmi_system)) {
    validate();
}

void SdpProblem::validate() const {
    const int p = lmi.order();
    if (quadratic.rows() != p || quadratic.cols() != p || linear.size() != p) {
        throw Error(ErrorKind::InvalidSpec, "objective size does not match the LMI order");
    }
    if (!quadratic.allFinite() || !linear.allFinite() || !std::isfinite(constant)) {
        throw Error(ErrorKind::InvalidSpec, "non-finite objective data");
    }
    if ((quadratic - quadratic.transpose()).cwiseAbs().maxCoeff() > 0.0) {
        throw Error(ErrorKind::InvalidSpec, "objective quadratic is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(quadratic, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < -1e-9 * std::abs(quadratic.trace())) {
        throw Error(ErrorKind::InvalidSpec, "objective quadratic is not positive semidefinite");
    }
}

MatrixXd SdpSolution::certificate() const { return kyp::sym_unvec(xi.tail(kyp::sym_count(order_p)), order_p); }

BlockSdp to_block_sdp(const SdpProblem& problem, double* objective_scale) {
    const int p = problem.order();
    const int ns = kyp::sym_count(p);
    const int t_var = p + ns;

    // Full objective [1; x]^T F [1; x], scaled to unit constant term.
    MatrixXd f(p + 1, p + 1);
    f(0, 0) = problem.constant;
    f.block(0, 1, 1, p) = 0.5 * problem.linear.transpose();
    f.block(1, 0, p, 1) = 0.5 * problem.linear;
    f.bottomRightCorner(p, p) = problem.quadratic;
    const double scale = problem.constant > 0.0 ? problem.constant : std::max(1.0, f.cwiseAbs().maxCoeff());
    f /= scale;
    if (objective_scale != nullptr) {
        *objective_scale = scale;
    }

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(f);
    const VectorXd& lam = es.eigenvalues();
    const double lmax = lam.maxCoeff();
    if (!(lmax > 0.0)) {
        throw Error(ErrorKind::DegenerateFilter, "objective matrix has no positive eigenvalue");
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) > 1e-12 * lmax) {
            keep.push_back(i);
        }
    }
    const auto r = static_cast<int>(keep.size());
    MatrixXd factor(r, p + 1);
    for (int i = 0; i < r; ++i) {
        factor.row(i) = std::sqrt(lam(keep[static_cast<std::size_t>(i)])) *
                        es.eigenvectors().col(keep[static_cast<std::size_t>(i)]).transpose();
    }

    BlockSdp sdp;
    sdp.b = VectorXd::Zero(t_var + 1);
    sdp.b(t_var) = -1.0;

    // Epigraph: [[I, R [1;x]], [., t]] PSD.
    MatrixXd c1 = MatrixXd::Zero(r + 1, r + 1);
    c1.topLeftCorner(r, r).setIdentity();
    c1.block(0, r, r, 1) = factor.col(0);
    c1.block(r, 0, 1, r) = factor.col(0).transpose();
    sdp.c.push_back(c1);
    std::vector<Term> epi;
    for (int i = 0; i < p; ++i) {
        SymSparse s;
        for (int k = 0; k < r; ++k) {
            s.add(k, r, -factor(k, i + 1));
        }
        epi.push_back({i, s});
    }
    SymSparse corner;
    corner.add(r, r, -1.0);
    epi.push_back({t_var, corner});
    sdp.terms.push_back(std::move(epi));

    // Bounded-real block: -M(xi) PSD.
    MatrixXd c2 = -problem.lmi.basis_dense(0);
    sdp.c.push_back(c2);
    std::vector<Term> kyp_terms;
    for (int i = 0; i < p + ns; ++i) {
        kyp_terms.push_back({i, problem.lmi.basis(i + 1)});
    }
    sdp.terms.push_back(std::move(kyp_terms));

    // Certificate block: P PSD.
    sdp.c.push_back(MatrixXd::Zero(p, p));
    std::vector<Term> cert;
    for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j) {
            SymSparse e;
            e.add(i, j, -1.0);
            cert.push_back({p + kyp::sym_index(p, i, j), e});
        }
    }
    sdp.terms.push_back(std::move(cert));
    return sdp;
}

SdpSolution solve(const SdpProblem& problem, const SolverSettings& settings) {
    problem.validate();
    double scale = 1.0;
    const BlockSdp block = to_block_sdp(problem, &scale);
    const auto res = solve_block_sdp(block, settings);

    SdpSolution sol;
    sol.order_p = problem.order();
    sol.status = res.status;
    sol.iterations = res.iterations;
    sol.duality_gap = res.rel_gap;
    sol.primal_infeas = res.primal_infeas;
    sol.dual_infeas = res.dual_infeas;
    sol.message = res.message;
    sol.xi = res.y.head(problem.variable_count());
    const VectorXd x = sol.xi.head(problem.order());
    sol.objective_value = problem.constant + problem.linear.dot(x) + x.dot(problem.quadratic * x);
    return sol;
}

NtfFir extract_ntf(const SdpSolution& solution, int order_p) {
    if (solution.status != SolveStatus::Optimal) {
        throw Error(ErrorKind::Extraction,
                    std::string("cannot extract an NTF from a solve with status ") + to_string(solution.status));
    }
    if (order_p < 1 || solution.xi.size() < order_p) {
        throw Error(ErrorKind::Extraction, "solution vector shorter than the requested order");
    }
    std::vector<double> tail(solution.xi.data(), solution.xi.data() + order_p);
    return NtfFir::from_tail(tail);
}

} // namespace ntfforge::sdp
