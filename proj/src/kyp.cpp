#include "ntfforge/kyp.hpp"
#include "ntfforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ntfforge::kyp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

dsp::Complex CanonicalRealization::transfer(double omega) const {
    const int p = order();
    const dsp::Complex z = std::polar(1.0, omega);
    Eigen::MatrixXcd m = -a.cast<dsp::Complex>();
    m.diagonal().array() += z;
    const Eigen::VectorXcd x = m.partialPivLu().solve(b.cast<dsp::Complex>());
    dsp::Complex y = d;
    for (int i = 0; i < p; ++i) {
        y += c(i) * x(i);
    }
    return y;
}

bool CanonicalRealization::controllable(double tol) const {
    const int p = order();
    MatrixXd ctrb(p, p);
    VectorXd col = b;
    for (int k = 0; k < p; ++k) {
        ctrb.col(k) = col;
        col = a * col;
    }
    Eigen::FullPivLU<MatrixXd> lu(ctrb);
    lu.setThreshold(tol);
    return lu.rank() == p;
}

CanonicalRealization canonical_realization(const NtfFir& ntf) {
    const int p = ntf.order();
    if (p < 1) {
        throw Error(ErrorKind::DegenerateOrder, "canonical realization needs order P >= 1");
    }
    CanonicalRealization r;
    r.a = MatrixXd::Zero(p, p);
    for (int i = 0; i + 1 < p; ++i) {
        r.a(i, i + 1) = 1.0;
    }
    r.b = VectorXd::Zero(p);
    r.b(p - 1) = 1.0;
    r.c.resize(p);
    const auto& a = ntf.coeffs();
    for (int j = 0; j < p; ++j) {
        r.c(j) = a[static_cast<std::size_t>(p - j)];
    }
    r.d = a[0];
    return r;
}

int sym_index(int p, int i, int j) noexcept {
    if (i > j) {
        std::swap(i, j);
    }
    return i * p - i * (i - 1) / 2 + (j - i);
}

MatrixXd sym_unvec(const VectorXd& v, int p) {
    MatrixXd m(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j) {
            m(i, j) = m(j, i) = v(sym_index(p, i, j));
        }
    }
    return m;
}

VectorXd sym_vec(const MatrixXd& m) {
    const auto p = static_cast<int>(m.rows());
    VectorXd v(sym_count(p));
    for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j) {
            v(sym_index(p, i, j)) = m(i, j);
        }
    }
    return v;
}

MatrixXd bounded_real_matrix(const CanonicalRealization& r, const MatrixXd& pm, double gamma) {
    const int p = r.order();
    MatrixXd m = MatrixXd::Zero(p + 2, p + 2);
    m.topLeftCorner(p, p) = r.a.transpose() * pm * r.a - pm;
    m.block(0, p, p, 1) = r.a.transpose() * pm * r.b;
    m.block(p, 0, 1, p) = m.block(0, p, p, 1).transpose();
    m(p, p) = r.b.dot(pm * r.b) - gamma * gamma;
    m.block(0, p + 1, p, 1) = r.c.transpose();
    m.block(p + 1, 0, 1, p) = r.c;
    m(p, p + 1) = m(p + 1, p) = r.d;
    m(p + 1, p + 1) = -1.0;
    return m;
}

MatrixXd dissipation_matrix(const CanonicalRealization& r, const MatrixXd& pm, double gamma) {
    const MatrixXd big = bounded_real_matrix(r, pm, gamma);
    const int n = r.order() + 1;
    // Schur complement of the -1 corner: M11 - M12 (-1)^-1 M21.
    MatrixXd reduced = big.topLeftCorner(n, n) + big.block(0, n, n, 1) * big.block(n, 0, 1, n);
    return 0.5 * (reduced + reduced.transpose());
}

namespace {

double max_eig(const MatrixXd& m) {
    if (m.rows() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double min_eig(const MatrixXd& m) {
    if (m.rows() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

sdp::SymSparse sparsify(const MatrixXd& m) {
    sdp::SymSparse s;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = i; j < m.cols(); ++j) {
            if (m(i, j) != 0.0) {
                s.entries.push_back({static_cast<int>(i), static_cast<int>(j), m(i, j)});
            }
        }
    }
    return s;
}

} // namespace

LmiSystem::LmiSystem(int order_p, double gamma) : order_p_(order_p), gamma_(gamma) {
    if (order_p < 1) {
        throw Error(ErrorKind::DegenerateOrder, "LMI needs order P >= 1");
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw Error(ErrorKind::InvalidSpec, "gamma must be positive");
    }
    const int p = order_p;
    const int n = p + 2;
    basis_.reserve(static_cast<std::size_t>(variable_count()) + 1);

    sdp::SymSparse m0;
    m0.add(p, p, -gamma * gamma);
    m0.add(p, p + 1, 1.0);
    m0.add(p + 1, p + 1, -1.0);
    basis_.push_back(std::move(m0));

    // a_k sits in C at column P - k.
    for (int k = 1; k <= p; ++k) {
        sdp::SymSparse mk;
        mk.add(p - k, p + 1, 1.0);
        basis_.push_back(std::move(mk));
    }

    const CanonicalRealization shape = canonical_realization(NtfFir::unit(p));
    for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j) {
            MatrixXd e = MatrixXd::Zero(p, p);
            e(i, j) = e(j, i) = 1.0;
            MatrixXd m = MatrixXd::Zero(n, n);
            m.topLeftCorner(p, p) = shape.a.transpose() * e * shape.a - e;
            m.block(0, p, p, 1) = shape.a.transpose() * e * shape.b;
            m.block(p, 0, 1, p) = m.block(0, p, p, 1).transpose();
            m(p, p) = shape.b.dot(e * shape.b);
            basis_.push_back(sparsify(m));
        }
    }
}

MatrixXd LmiSystem::evaluate(const VectorXd& xi) const {
    if (xi.size() != variable_count()) {
        throw Error(ErrorKind::InvalidSpec, "LMI variable vector has the wrong length");
    }
    MatrixXd m = basis_[0].dense(dimension());
    for (int i = 0; i < variable_count(); ++i) {
        if (xi(i) != 0.0) {
            basis_[static_cast<std::size_t>(i) + 1].accumulate(m, xi(i));
        }
    }
    return m;
}

VectorXd LmiSystem::pack(const NtfFir& ntf, const MatrixXd& p_matrix) const {
    if (ntf.order() != order_p_ || p_matrix.rows() != order_p_ || p_matrix.cols() != order_p_) {
        throw Error(ErrorKind::InvalidSpec, "NTF or certificate size does not match the LMI");
    }
    VectorXd xi(variable_count());
    for (int k = 1; k <= order_p_; ++k) {
        xi(k - 1) = ntf.coeffs()[static_cast<std::size_t>(k)];
    }
    xi.tail(sym_count(order_p_)) = sym_vec(p_matrix);
    return xi;
}

MatrixXd LmiSystem::evaluate(const NtfFir& ntf, const MatrixXd& p_matrix) const {
    return evaluate(pack(ntf, p_matrix));
}

LmiSystem assemble_lmi(int order_p, double gamma) { return LmiSystem(order_p, gamma); }

double grid_max_gain(const NtfFir& ntf, std::size_t points) {
    const auto grid = dsp::FrequencyGrid::uniform(points);
    double best = 0.0;
    for (double w : grid.omegas) {
        best = std::max(best, std::abs(ntf.response(w)));
    }
    return best;
}

double peak_gain(const NtfFir& ntf, std::size_t points) {
    const auto grid = dsp::FrequencyGrid::uniform(points);
    std::vector<double> mag(grid.count());
    for (std::size_t k = 0; k < mag.size(); ++k) {
        mag[k] = std::abs(ntf.response(grid.omegas[k]));
    }
    double best = *std::max_element(mag.begin(), mag.end());
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (std::size_t k = 0; k < mag.size(); ++k) {
        const bool left_ok = k == 0 || mag[k] >= mag[k - 1];
        const bool right_ok = k + 1 == mag.size() || mag[k] >= mag[k + 1];
        if (!left_ok || !right_ok || mag[k] < 0.99 * best) {
            continue;
        }
        double lo = grid.omegas[k == 0 ? 0 : k - 1];
        double hi = grid.omegas[k + 1 == mag.size() ? k : k + 1];
        for (int it = 0; it < 60 && hi - lo > 1e-15; ++it) {
            const double m1 = hi - phi * (hi - lo);
            const double m2 = lo + phi * (hi - lo);
            if (std::abs(ntf.response(m1)) < std::abs(ntf.response(m2))) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        best = std::max(best, std::abs(ntf.response(0.5 * (lo + hi))));
    }
    return best;
}

bool BoundedRealCertificate::lmi_satisfied(double tol) const {
    const double trace = p_matrix.rows() > 0 ? p_matrix.trace() : 0.0;
    return max_eig_big <= tol && min_eig_p >= -1e-9 * std::abs(trace);
}

bool BoundedRealCertificate::grid_satisfied(double slack) const { return grid_max <= gamma * (1.0 + slack); }

BoundedRealCertificate evaluate_certificate(const NtfFir& ntf, double gamma, const MatrixXd& p_matrix) {
    BoundedRealCertificate cert;
    cert.gamma = gamma;
    cert.p_matrix = p_matrix;
    cert.grid_max = grid_max_gain(ntf);
    if (ntf.order() == 0) {
        MatrixXd m(2, 2);
        m << -gamma * gamma, ntf.coeffs()[0], ntf.coeffs()[0], -1.0;
        cert.max_eig_big = max_eig(m);
        cert.min_eig_p = 0.0;
        cert.p_matrix.resize(0, 0);
        return cert;
    }
    const LmiSystem lmi(ntf.order(), gamma);
    cert.max_eig_big = max_eig(lmi.evaluate(ntf, p_matrix));
    cert.min_eig_p = min_eig(p_matrix);
    return cert;
}

FeasibilityResult find_certificate(const NtfFir& ntf, double gamma, const sdp::SolverSettings& settings) {
    const int p = ntf.order();
    FeasibilityResult out;
    if (p == 0) {
        out.t = evaluate_certificate(ntf, gamma, MatrixXd()).max_eig_big;
        out.status = sdp::SolveStatus::Optimal;
        return out;
    }
    const LmiSystem lmi(p, gamma);
    const int ns = sym_count(p);
    const int t_var = ns;

    // Variables y = (vec P, t); maximize -t.
    sdp::BlockSdp prob;
    prob.b = VectorXd::Zero(ns + 1);
    prob.b(t_var) = -1.0;

    // Block 1: t I - M(a, P) PSD.
    MatrixXd m_fixed = lmi.basis_dense(0);
    for (int k = 1; k <= p; ++k) {
        lmi.basis(k).accumulate(m_fixed, ntf.coeffs()[static_cast<std::size_t>(k)]);
    }
    prob.c.push_back(-m_fixed);
    std::vector<sdp::Term> kyp_terms;
    for (int s = 0; s < ns; ++s) {
        kyp_terms.push_back({s, lmi.basis(p + 1 + s)});
    }
    sdp::SymSparse minus_identity;
    for (int i = 0; i < lmi.dimension(); ++i) {
        minus_identity.add(i, i, -1.0);
    }
    kyp_terms.push_back({t_var, minus_identity});
    prob.terms.push_back(std::move(kyp_terms));

    // Block 2: P PSD.
    prob.c.push_back(MatrixXd::Zero(p, p));
    std::vector<sdp::Term> cert_terms;
    for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j) {
            sdp::SymSparse e;
            e.add(i, j, -1.0);
            cert_terms.push_back({sym_index(p, i, j), e});
        }
    }
    prob.terms.push_back(std::move(cert_terms));

    const auto res = sdp::solve_block_sdp(prob, settings);
    out.status = res.status;
    out.iterations = res.iterations;
    out.t = res.y(t_var);
    out.p_matrix = sym_unvec(res.y.head(ns), p);
    return out;
}

BoundedRealCertificate verify_bounded_real(const NtfFir& ntf, double gamma, const std::optional<MatrixXd>& certificate,
                                           const sdp::SolverSettings& settings) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw Error(ErrorKind::InvalidSpec, "gamma must be positive");
    }
    const auto fail = [&](const std::string& why, double grid_max) {
        std::ostringstream msg;
        msg << why << " at gamma = " << gamma << " (grid max |NTF| = " << grid_max << ")";
        throw Error(ErrorKind::BoundViolation, msg.str());
    };

    BoundedRealCertificate cert;
    if (certificate) {
        cert = evaluate_certificate(ntf, gamma, *certificate);
        if (!cert.lmi_satisfied()) {
            fail("supplied certificate does not satisfy the LMI", cert.grid_max);
        }
    } else {
        const auto found = find_certificate(ntf, gamma, settings);
        if (found.status == sdp::SolveStatus::Infeasible ||
            (found.status == sdp::SolveStatus::Optimal && found.t > kLmiTol)) {
            fail("bounded-real LMI infeasible", grid_max_gain(ntf));
        }
        if (found.status != sdp::SolveStatus::Optimal) {
            std::ostringstream msg;
            msg << "certificate search ended with status " << sdp::to_string(found.status);
            throw Error(ErrorKind::Solver, msg.str());
        }
        cert = evaluate_certificate(ntf, gamma, found.p_matrix);
        if (!cert.lmi_satisfied()) {
            fail("certificate search returned a point violating the LMI", cert.grid_max);
        }
    }
    if (!cert.grid_satisfied()) {
        fail("LMI accepted but the frequency grid exceeds the bound", cert.grid_max);
    }
    return cert;
}

std::pair<bool, bool> schur_equivalence_check(const CanonicalRealization& r, const MatrixXd& p_matrix, double gamma,
                                              double tol) {
    const MatrixXd big = bounded_real_matrix(r, p_matrix, gamma);
    const MatrixXd reduced = dissipation_matrix(r, p_matrix, gamma);
    const double scale = std::max(1.0, big.cwiseAbs().maxCoeff());
    return {max_eig(big) <= tol * scale, max_eig(reduced) <= tol * scale};
}

} // namespace ntfforge::kyp
