#include "ntfforge/dsp.hpp"
#include "ntfforge/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace ntfforge::dsp {

namespace {

// Parlett-Reinsch balancing with powers of two, in place.
void balance(Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    constexpr double radix = 2.0;
    bool done = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = 0.0;
            double r = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) {
                    continue;
                }
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) {
                continue;
            }
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix * radix;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                a.row(i) /= f;
                a.col(i) *= f;
            }
        }
    }
}

Complex eval_descending(std::span<const double> c, Complex x) {
    Complex acc = 0.0;
    for (double v : c) {
        acc = acc * x + v;
    }
    return acc;
}

Complex eval_descending_derivative(std::span<const double> c, Complex x) {
    const std::size_t n = c.size() - 1;
    Complex acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc = acc * x + c[k] * static_cast<double>(n - k);
    }
    return acc;
}

} // namespace

std::vector<Complex> polynomial_roots(std::span<const double> coeffs) {
    auto first = std::find_if(coeffs.begin(), coeffs.end(), [](double v) { return v != 0.0; });
    if (first == coeffs.end()) {
        throw Error(ErrorKind::InvalidPolynomial, "all coefficients are zero");
    }
    for (double v : coeffs) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::InvalidPolynomial, "non-finite coefficient");
        }
    }
    std::span<const double> c(first, coeffs.end());

    // Trailing zeros are roots at the origin.
    std::size_t zeros_at_origin = 0;
    while (c.size() > 1 && c.back() == 0.0) {
        c = c.first(c.size() - 1);
        ++zeros_at_origin;
    }

    std::vector<Complex> roots;
    const std::size_t n = c.size() - 1;
    if (n > 0) {
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j) {
            companion(0, static_cast<Eigen::Index>(j)) = -c[j + 1] / c[0];
        }
        for (std::size_t i = 1; i < n; ++i) {
            companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
        }
        balance(companion);
        Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
        if (solver.info() != Eigen::Success) {
            throw Error(ErrorKind::InvalidPolynomial, "companion eigenvalue iteration failed");
        }
        const auto& ev = solver.eigenvalues();
        roots.reserve(n + zeros_at_origin);
        for (Eigen::Index i = 0; i < ev.size(); ++i) {
            Complex r = ev(i);
            // A couple of Newton steps, kept only when they shrink the residual.
            for (int it = 0; it < 3; ++it) {
                const Complex p = eval_descending(c, r);
                const Complex dp = eval_descending_derivative(c, r);
                if (dp == Complex{0.0, 0.0}) {
                    break;
                }
                const Complex candidate = r - p / dp;
                if (std::abs(eval_descending(c, candidate)) < std::abs(p)) {
                    r = candidate;
                } else {
                    break;
                }
            }
            roots.push_back(r);
        }
    }
    roots.insert(roots.end(), zeros_at_origin, Complex{0.0, 0.0});
    return roots;
}

std::vector<double> polynomial_from_roots(std::span<const Complex> roots) {
    std::vector<Complex> p{Complex{1.0, 0.0}};
    for (const Complex& r : roots) {
        std::vector<Complex> next(p.size() + 1, Complex{0.0, 0.0});
        for (std::size_t k = 0; k < p.size(); ++k) {
            next[k] += p[k];
            next[k + 1] -= r * p[k];
        }
        p = std::move(next);
    }
    std::vector<double> out(p.size());
    std::transform(p.begin(), p.end(), out.begin(), [](Complex v) { return v.real(); });
    return out;
}

std::vector<double> poly_multiply(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        return {};
    }
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

std::vector<double> poly_add(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] += a[i];
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        out[i] += b[i];
    }
    return out;
}

Complex poly_eval_ascending(std::span<const double> coeffs, Complex x) {
    Complex acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
        acc = acc * x + *it;
    }
    return acc;
}

} // namespace ntfforge::dsp
