#include "ntfforge/error.hpp"
#include "ntfforge/sdp_core.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ntfforge::sdp {

void SymSparse::add(int row, int col, double value) {
    if (value == 0.0) {
        return;
    }
    if (row > col) {
        std::swap(row, col);
    }
    for (auto& e : entries) {
        if (e.row == row && e.col == col) {
            e.value += value;
            return;
        }
    }
    entries.push_back({row, col, value});
}

Eigen::MatrixXd SymSparse::dense(int n) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    accumulate(m, 1.0);
    return m;
}

double SymSparse::dot(const Eigen::MatrixXd& x) const {
    double acc = 0.0;
    for (const auto& e : entries) {
        acc += (e.row == e.col ? 1.0 : 2.0) * e.value * x(e.row, e.col);
    }
    return acc;
}

void SymSparse::accumulate(Eigen::MatrixXd& out, double scale) const {
    for (const auto& e : entries) {
        out(e.row, e.col) += scale * e.value;
        if (e.row != e.col) {
            out(e.col, e.row) += scale * e.value;
        }
    }
}

void BlockSdp::validate() const {
    if (terms.size() != c.size()) {
        throw Error(ErrorKind::InvalidSpec, "SDP block count mismatch");
    }
    for (std::size_t k = 0; k < c.size(); ++k) {
        const auto n = static_cast<int>(c[k].rows());
        if (c[k].cols() != n || n == 0) {
            throw Error(ErrorKind::InvalidSpec, "SDP block matrices must be square and nonempty");
        }
        std::vector<bool> seen(b.size(), false);
        for (const auto& t : terms[k]) {
            if (t.var < 0 || t.var >= variable_count()) {
                throw Error(ErrorKind::InvalidSpec, "SDP term refers to an unknown variable");
            }
            if (seen[static_cast<std::size_t>(t.var)]) {
                throw Error(ErrorKind::InvalidSpec, "SDP variable listed twice in one block");
            }
            seen[static_cast<std::size_t>(t.var)] = true;
            for (const auto& e : t.mat.entries) {
                if (e.row < 0 || e.col < e.row || e.col >= n) {
                    throw Error(ErrorKind::InvalidSpec, "SDP sparse entry out of range");
                }
            }
        }
    }
}

void SolverSettings::validate() const {
    if (!(gap_tol > 0.0) || !(feas_tol > 0.0) || max_iter < 1) {
        throw Error(ErrorKind::InvalidSpec, "solver tolerances and iteration cap must be positive");
    }
}

const char* to_string(SolveStatus status) noexcept {
    switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Blocks = std::vector<MatrixXd>;

double inner(const Blocks& a, const Blocks& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        acc += a[k].cwiseProduct(b[k]).sum();
    }
    return acc;
}

double norm(const Blocks& a) { return std::sqrt(inner(a, a)); }

VectorXd apply_a(const BlockSdp& p, const Blocks& x) {
    VectorXd out = VectorXd::Zero(p.variable_count());
    for (std::size_t k = 0; k < x.size(); ++k) {
        for (const auto& t : p.terms[k]) {
            out(t.var) += t.mat.dot(x[k]);
        }
    }
    return out;
}

Blocks apply_at(const BlockSdp& p, const VectorXd& y) {
    Blocks out;
    for (std::size_t k = 0; k < p.c.size(); ++k) {
        MatrixXd m = MatrixXd::Zero(p.c[k].rows(), p.c[k].cols());
        for (const auto& t : p.terms[k]) {
            t.mat.accumulate(m, y(t.var));
        }
        out.push_back(std::move(m));
    }
    return out;
}

void symmetrize(MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

// Nesterov-Todd scaling point W with W Z W = X, factored as W = G G^T so that
// G^-1 X G^-T = G^T Z G = diag(d).
struct Scaling {
    MatrixXd lx;
    MatrixXd g;
    MatrixXd ginv;
    MatrixXd w;
    VectorXd d;
};

bool nt_scaling(const MatrixXd& x, const MatrixXd& z, Scaling& s) {
    Eigen::LLT<MatrixXd> cx(x);
    Eigen::LLT<MatrixXd> cz(z);
    if (cx.info() != Eigen::Success || cz.info() != Eigen::Success) {
        return false;
    }
    s.lx = cx.matrixL();
    const MatrixXd lz = cz.matrixL();
    Eigen::JacobiSVD<MatrixXd> svd(lz.transpose() * s.lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
    s.d = svd.singularValues();
    if (!s.d.allFinite() || s.d.minCoeff() <= 0.0) {
        return false;
    }
    const VectorXd root = s.d.cwiseSqrt();
    const MatrixXd& v = svd.matrixV();
    s.g = s.lx * v * root.cwiseInverse().asDiagonal();
    const MatrixXd rhs = v * root.asDiagonal();
    s.ginv = s.lx.transpose().triangularView<Eigen::Upper>().solve(rhs).transpose();
    s.w = s.g * s.g.transpose();
    symmetrize(s.w);
    return s.w.allFinite() && s.ginv.allFinite();
}

// Largest alpha with X + alpha dX PSD, given X = L L^T.
double max_step(const MatrixXd& lx, const MatrixXd& dx) {
    const auto lo = lx.triangularView<Eigen::Lower>();
    MatrixXd m = lo.solve(dx);
    m = lo.solve(m.transpose().eval());
    symmetrize(m);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

// Schur complement H_ij = sum_k <A_ik, W_k A_jk W_k>.
MatrixXd schur_matrix(const BlockSdp& p, const std::vector<Scaling>& sc) {
    const int m = p.variable_count();
    MatrixXd h = MatrixXd::Zero(m, m);
    for (std::size_t k = 0; k < p.c.size(); ++k) {
        const MatrixXd& w = sc[k].w;
        const auto& terms = p.terms[k];
        MatrixXd g(w.rows(), w.cols());
        for (std::size_t i = 0; i < terms.size(); ++i) {
            g.setZero();
            for (const auto& e : terms[i].mat.entries) {
                if (e.row == e.col) {
                    g.noalias() += e.value * w.col(e.row) * w.col(e.row).transpose();
                } else {
                    g.noalias() += e.value * w.col(e.row) * w.col(e.col).transpose();
                    g.noalias() += e.value * w.col(e.col) * w.col(e.row).transpose();
                }
            }
            const int vi = terms[i].var;
            for (std::size_t j = i; j < terms.size(); ++j) {
                const int vj = terms[j].var;
                const double val = terms[j].mat.dot(g);
                h(vi, vj) += val;
                if (vi != vj) {
                    h(vj, vi) += val;
                }
            }
        }
    }
    return h;
}

class SchurSolver {
public:
    bool factor(const MatrixXd& h) {
        llt_.compute(h);
        if (llt_.info() == Eigen::Success) {
            return true;
        }
        // Late iterations can leave H barely indefinite through roundoff.
        const double shift = 1e-13 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
        MatrixXd reg = h;
        reg.diagonal().array() += shift;
        llt_.compute(reg);
        return llt_.info() == Eigen::Success;
    }
    [[nodiscard]] VectorXd solve(const VectorXd& rhs) const { return llt_.solve(rhs); }

private:
    Eigen::LLT<MatrixXd> llt_;
};

struct Direction {
    Blocks dx;
    VectorXd dy;
    Blocks dz;
};

// Solves the NT Newton system for a given scaled complementarity right-hand side.
Direction newton_direction(const BlockSdp& p, const std::vector<Scaling>& sc, const SchurSolver& schur,
                           const VectorXd& rp, const Blocks& rd, const Blocks& comp_rhs) {
    Blocks rx(p.c.size());
    Blocks wrdw(p.c.size());
    for (std::size_t k = 0; k < p.c.size(); ++k) {
        const VectorXd& d = sc[k].d;
        const auto n = d.size();
        MatrixXd t(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                t(i, j) = comp_rhs[k](i, j) / (d(i) + d(j));
            }
        }
        rx[k] = sc[k].g * t * sc[k].g.transpose();
        symmetrize(rx[k]);
        wrdw[k] = sc[k].w * rd[k] * sc[k].w;
    }
    Direction dir;
    dir.dy = schur.solve(rp - apply_a(p, rx) + apply_a(p, wrdw));
    const Blocks aty = apply_at(p, dir.dy);
    for (std::size_t k = 0; k < p.c.size(); ++k) {
        MatrixXd dz = rd[k] - aty[k];
        symmetrize(dz);
        MatrixXd dx = rx[k] - sc[k].w * dz * sc[k].w;
        symmetrize(dx);
        dir.dz.push_back(std::move(dz));
        dir.dx.push_back(std::move(dx));
    }
    return dir;
}

std::pair<double, double> step_lengths(const std::vector<Scaling>& sc, const Blocks& z, const Direction& dir) {
    double ap = std::numeric_limits<double>::infinity();
    double ad = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < sc.size(); ++k) {
        ap = std::min(ap, max_step(sc[k].lx, dir.dx[k]));
        Eigen::LLT<MatrixXd> cz(z[k]);
        ad = std::min(ad, max_step(cz.matrixL(), dir.dz[k]));
    }
    return {ap, ad};
}

} // namespace

BlockSdpResult solve_block_sdp(const BlockSdp& p, const SolverSettings& settings) {
    p.validate();
    settings.validate();

    const int m = p.variable_count();
    const std::size_t nb = p.c.size();
    double total_dim = 0.0;
    for (const auto& c : p.c) {
        total_dim += static_cast<double>(c.rows());
    }

    // Identity-scaled infeasible start sized from the data norms.
    BlockSdpResult res;
    res.y = VectorXd::Zero(m);
    for (std::size_t k = 0; k < nb; ++k) {
        const double n = static_cast<double>(p.c[k].rows());
        double max_a = 0.0;
        double ratio = 0.0;
        for (const auto& t : p.terms[k]) {
            const double an = t.mat.dense(static_cast<int>(n)).norm();
            max_a = std::max(max_a, an);
            ratio = std::max(ratio, (1.0 + std::abs(p.b(t.var))) / (1.0 + an));
        }
        const double xi = std::max({10.0, std::sqrt(n), n * ratio});
        const double eta = std::max({10.0, std::sqrt(n), max_a, p.c[k].norm()});
        res.x.push_back(xi * MatrixXd::Identity(p.c[k].rows(), p.c[k].cols()));
        res.z.push_back(eta * MatrixXd::Identity(p.c[k].rows(), p.c[k].cols()));
    }

    double c_norm = 0.0;
    for (const auto& c : p.c) {
        c_norm += c.squaredNorm();
    }
    c_norm = std::sqrt(c_norm);
    const double b_norm = p.b.norm();
    constexpr double step_fraction = 0.98;
    int stalled = 0;

    for (int iter = 0;; ++iter) {
        const VectorXd rp = p.b - apply_a(p, res.x);
        Blocks rd = apply_at(p, res.y);
        for (std::size_t k = 0; k < nb; ++k) {
            rd[k] = p.c[k] - res.z[k] - rd[k];
        }
        res.primal_obj = inner(p.c, res.x);
        res.dual_obj = p.b.dot(res.y);
        const double gap = inner(res.x, res.z);
        const double mu = gap / total_dim;
        res.rel_gap = std::max(gap, std::abs(res.primal_obj - res.dual_obj)) /
                      (1.0 + std::abs(res.primal_obj) + std::abs(res.dual_obj));
        res.primal_infeas = rp.norm() / (1.0 + b_norm);
        res.dual_infeas = norm(rd) / (1.0 + c_norm);
        res.iterations = iter;

        IterationInfo info{iter, res.primal_obj, res.dual_obj, res.rel_gap, res.primal_infeas, res.dual_infeas, mu,
                           0.0, 0.0};

        if (res.rel_gap <= settings.gap_tol && res.primal_infeas <= settings.feas_tol &&
            res.dual_infeas <= settings.feas_tol) {
            res.status = SolveStatus::Optimal;
            res.history.push_back(info);
            spdlog::debug("sdp it {:3d} gap {:.3e} pinf {:.3e} dinf {:.3e} converged", iter, res.rel_gap,
                          res.primal_infeas, res.dual_infeas);
            return res;
        }
        if (res.dual_obj > 0.0) {
            Blocks cert = rd;
            for (std::size_t k = 0; k < nb; ++k) {
                cert[k] = p.c[k] - rd[k];
            }
            if (norm(cert) / res.dual_obj < 1e-8) {
                res.status = SolveStatus::Infeasible;
                res.message = "dual objective unbounded: primal problem infeasible";
                return res;
            }
        }
        if (res.primal_obj < 0.0 && (p.b - rp).norm() / -res.primal_obj < 1e-8) {
            res.status = SolveStatus::Infeasible;
            res.message = "primal objective unbounded: dual problem infeasible";
            return res;
        }
        if (iter >= settings.max_iter) {
            res.status = SolveStatus::MaxIterations;
            res.message = "iteration cap reached";
            return res;
        }

        std::vector<Scaling> sc(nb);
        for (std::size_t k = 0; k < nb; ++k) {
            if (!nt_scaling(res.x[k], res.z[k], sc[k])) {
                res.status = SolveStatus::NumericalFailure;
                res.message = "scaling factorization failed at iteration " + std::to_string(iter);
                return res;
            }
        }
        SchurSolver schur;
        if (!schur.factor(schur_matrix(p, sc))) {
            res.status = SolveStatus::NumericalFailure;
            res.message = "Schur complement not positive definite at iteration " + std::to_string(iter);
            return res;
        }

        // Predictor: pure Newton step towards mu = 0.
        Blocks comp(nb);
        for (std::size_t k = 0; k < nb; ++k) {
            comp[k] = MatrixXd(-2.0 * sc[k].d.array().square().matrix().asDiagonal());
        }
        const Direction aff = newton_direction(p, sc, schur, rp, rd, comp);
        const auto [ap_aff, ad_aff] = step_lengths(sc, res.z, aff);
        const double a_p = std::min(1.0, ap_aff);
        const double a_d = std::min(1.0, ad_aff);
        double gap_aff = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
            gap_aff += (res.x[k] + a_p * aff.dx[k]).cwiseProduct(res.z[k] + a_d * aff.dz[k]).sum();
        }
        const double sigma = std::clamp(std::pow(std::max(gap_aff, 0.0) / gap, 3.0), 0.0, 1.0);

        // Corrector with the second-order term in the scaled space.
        for (std::size_t k = 0; k < nb; ++k) {
            const MatrixXd dxs = sc[k].ginv * aff.dx[k] * sc[k].ginv.transpose();
            const MatrixXd dzs = sc[k].g.transpose() * aff.dz[k] * sc[k].g;
            MatrixXd rhs = -(dxs * dzs + dzs * dxs);
            rhs.diagonal().array() += 2.0 * sigma * mu - 2.0 * sc[k].d.array().square();
            comp[k] = rhs;
        }
        const Direction dir = newton_direction(p, sc, schur, rp, rd, comp);
        const auto [ap_max, ad_max] = step_lengths(sc, res.z, dir);
        const double alpha_p = std::min(1.0, step_fraction * ap_max);
        const double alpha_d = std::min(1.0, step_fraction * ad_max);

        info.step_primal = alpha_p;
        info.step_dual = alpha_d;
        res.history.push_back(info);
        spdlog::debug("sdp it {:3d} pobj {:+.9e} dobj {:+.9e} gap {:.3e} pinf {:.3e} dinf {:.3e} ap {:.3f} ad {:.3f}",
                      iter, res.primal_obj, res.dual_obj, res.rel_gap, res.primal_infeas, res.dual_infeas,
                      alpha_p, alpha_d);

        for (std::size_t k = 0; k < nb; ++k) {
            res.x[k] += alpha_p * dir.dx[k];
            res.z[k] += alpha_d * dir.dz[k];
            symmetrize(res.x[k]);
            symmetrize(res.z[k]);
        }
        res.y += alpha_d * dir.dy;

        stalled = (alpha_p < 1e-8 && alpha_d < 1e-8) ? stalled + 1 : 0;
        if (stalled >= 3) {
            res.status = SolveStatus::NumericalFailure;
            res.message = "step lengths collapsed at iteration " + std::to_string(iter);
            return res;
        }
    }
}

} // namespace ntfforge::sdp
