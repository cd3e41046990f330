#include "ntfforge/objective.hpp"
#include "ntfforge/error.hpp"
#include "ntfforge/ntf.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ntfforge {

NtfFir::NtfFir(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) {
        throw Error(ErrorKind::InvalidSpec, "NTF needs at least one coefficient");
    }
    for (double v : coeffs_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::InvalidSpec, "non-finite NTF coefficient");
        }
    }
    if (coeffs_.front() != 1.0) {
        std::ostringstream msg;
        msg << "NTF leading coefficient is " << coeffs_.front() << ", must be exactly 1";
        throw Error(ErrorKind::CausalityViolation, msg.str());
    }
}

NtfFir NtfFir::unit(int order_p) {
    std::vector<double> a(static_cast<std::size_t>(std::max(order_p, 0)) + 1, 0.0);
    a[0] = 1.0;
    return NtfFir(std::move(a));
}

NtfFir NtfFir::from_tail(std::span<const double> tail) {
    std::vector<double> a{1.0};
    a.insert(a.end(), tail.begin(), tail.end());
    return NtfFir(std::move(a));
}

dsp::Complex NtfFir::response(double omega) const {
    return dsp::poly_eval_ascending(coeffs_, std::polar(1.0, -omega));
}

std::vector<dsp::Complex> NtfFir::zeros() const {
    if (coeffs_.size() < 2) {
        return {};
    }
    return dsp::polynomial_roots(coeffs_);
}

} // namespace ntfforge

namespace ntfforge::objective {

double NoiseBudget::pds_constant() const noexcept { return delta * delta / (12.0 * std::numbers::pi); }

double ReducedObjective::evaluate(const Eigen::VectorXd& x) const {
    return constant + linear.dot(x) + x.dot(quadratic * x);
}

QMatrix build_q_matrix(std::span<const double> h, int order_p) {
    if (order_p < 1) {
        throw Error(ErrorKind::InvalidSpec, "NTF order must be at least 1");
    }
    if (h.empty() || std::all_of(h.begin(), h.end(), [](double v) { return v == 0.0; })) {
        throw Error(ErrorKind::DegenerateFilter, "impulse response is identically zero");
    }
    const auto p = static_cast<std::size_t>(order_p);
    QMatrix q;
    q.first_row.assign(p + 1, 0.0);
    for (std::size_t k = 0; k <= p && k < h.size(); ++k) {
        double acc = 0.0;
        for (std::size_t i = k; i < h.size(); ++i) {
            acc += h[i] * h[i - k];
        }
        q.first_row[k] = acc;
    }
    const auto n = static_cast<Eigen::Index>(p + 1);
    q.entries.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            q.entries(j, k) = q.first_row[static_cast<std::size_t>(std::abs(j - k))];
        }
    }
    return q;
}

QMatrix build_q_matrix(const dsp::ImpulseResponse& h, int order_p) { return build_q_matrix(h.samples, order_p); }

ReducedObjective reduce_objective(const QMatrix& q) {
    const Eigen::Index p = q.entries.rows() - 1;
    ReducedObjective r;
    r.quadratic = q.entries.bottomRightCorner(p, p);
    r.linear = 2.0 * q.entries.row(0).tail(p).transpose();
    r.constant = q.entries(0, 0);
    return r;
}

double quadratic_form(const QMatrix& q, std::span<const double> a) {
    if (static_cast<Eigen::Index>(a.size()) != q.entries.rows()) {
        throw Error(ErrorKind::InvalidSpec, "coefficient count does not match Q");
    }
    const Eigen::Map<const Eigen::VectorXd> v(a.data(), static_cast<Eigen::Index>(a.size()));
    return v.dot(q.entries * v);
}

double sigma2_h_fir(const QMatrix& q, std::span<const double> a, const NoiseBudget& budget) {
    return budget.sigma2_eps() * quadratic_form(q, a);
}

double trapezoid(std::span<const double> values, const dsp::FrequencyGrid& grid) {
    if (values.size() != grid.count() || values.size() < 2) {
        throw Error(ErrorKind::Evaluation, "quadrature grid and samples disagree");
    }
    double acc = 0.0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        acc += 0.5 * (values[k] + values[k - 1]) * (grid.omegas[k] - grid.omegas[k - 1]);
    }
    return acc;
}

std::vector<double> merit_integrand(std::span<const double> ntf_num, std::span<const double> ntf_den,
                                    const dsp::RationalFilter& filter, const dsp::FrequencyGrid& grid) {
    const auto ntf = dsp::frequency_response(ntf_num, ntf_den, grid);
    const auto h = dsp::frequency_response(filter, grid);
    std::vector<double> out(grid.count());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = std::norm(ntf[k]) * std::norm(h[k]);
        if (!std::isfinite(out[k])) {
            std::ostringstream msg;
            msg << "non-finite integrand at omega = " << grid.omegas[k];
            throw Error(ErrorKind::Evaluation, msg.str());
        }
    }
    return out;
}

namespace {

double sigma2_h_plain(std::span<const double> ntf_num, std::span<const double> ntf_den,
                      const dsp::RationalFilter& filter, const NoiseBudget& budget,
                      const dsp::FrequencyGrid& grid) {
    return budget.pds_constant() * trapezoid(merit_integrand(ntf_num, ntf_den, filter, grid), grid);
}

} // namespace

double QuadratureCheck::relative_change() const {
    const double scale = std::max(std::abs(value), std::abs(refined));
    return scale == 0.0 ? 0.0 : std::abs(value - refined) / scale;
}

QuadratureCheck sigma2_h_checked(std::span<const double> ntf_num, std::span<const double> ntf_den,
                                 const dsp::RationalFilter& filter, const NoiseBudget& budget,
                                 const dsp::FrequencyGrid& grid) {
    QuadratureCheck c;
    c.value = sigma2_h_plain(ntf_num, ntf_den, filter, budget, grid);
    const auto fine = dsp::FrequencyGrid::uniform(2 * (grid.count() - 1) + 1);
    c.refined = sigma2_h_plain(ntf_num, ntf_den, filter, budget, fine);
    return c;
}

double sigma2_h(std::span<const double> ntf_num, std::span<const double> ntf_den,
                const dsp::RationalFilter& filter, const NoiseBudget& budget, const dsp::FrequencyGrid& grid) {
    const auto c = sigma2_h_checked(ntf_num, ntf_den, filter, budget, grid);
    if (!c.converged()) {
        spdlog::warn("sigma2_h changes by {:.3g}% when the {}-point grid is doubled", 100.0 * c.relative_change(),
                     grid.count());
    }
    return c.value;
}

double sigma2_weighted(std::span<const double> ntf_num, std::span<const double> ntf_den,
                       std::span<const double> weight, const NoiseBudget& budget, const dsp::FrequencyGrid& grid) {
    if (weight.size() != grid.count()) {
        throw Error(ErrorKind::Evaluation, "weight length does not match the grid");
    }
    const auto ntf = dsp::frequency_response(ntf_num, ntf_den, grid);
    std::vector<double> values(grid.count());
    for (std::size_t k = 0; k < values.size(); ++k) {
        values[k] = std::norm(ntf[k]) * weight[k];
        if (!std::isfinite(values[k])) {
            throw Error(ErrorKind::Evaluation, "non-finite weighted integrand");
        }
    }
    return budget.pds_constant() * trapezoid(values, grid);
}

double sigma2_inband(std::span<const double> ntf_num, std::span<const double> ntf_den,
                     const std::vector<OmegaBand>& bands, const NoiseBudget& budget, std::size_t points_per_band) {
    if (bands.empty()) {
        throw Error(ErrorKind::InvalidBand, "empty band set");
    }
    if (points_per_band < 3) {
        throw Error(ErrorKind::InvalidBand, "need at least three points per band");
    }
    const std::size_t n = points_per_band % 2 == 1 ? points_per_band : points_per_band + 1;
    double previous_high = -1.0;
    double total = 0.0;
    for (const auto& [lo, hi] : bands) {
        if (!(lo >= 0.0) || !(hi > lo) || hi > std::numbers::pi || !(lo >= previous_high)) {
            throw Error(ErrorKind::InvalidBand, "bands must lie in [0, pi], be nonempty, sorted and disjoint");
        }
        previous_high = hi;
        dsp::FrequencyGrid g;
        g.omegas.resize(n);
        const double step = (hi - lo) / static_cast<double>(n - 1);
        for (std::size_t k = 0; k < n; ++k) {
            g.omegas[k] = lo + step * static_cast<double>(k);
        }
        g.omegas.back() = hi;
        const auto r = dsp::frequency_response(ntf_num, ntf_den, g);
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double w = (k == 0 || k == n - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
            acc += w * std::norm(r[k]);
        }
        total += acc * step / 3.0;
    }
    return budget.pds_constant() * total;
}

} // namespace ntfforge::objective
