#pragma once

#include "ntfforge/dsp.hpp"

#include <span>
#include <vector>

namespace ntfforge {

/// FIR noise transfer function a0 + a1 z^-1 + ... + aP z^-P with a0 == 1.
class NtfFir {
public:
    /// Throws CausalityViolation when coeffs[0] != 1, InvalidSpec when empty or non-finite.
    explicit NtfFir(std::vector<double> coeffs);

    /// NTF == 1 padded to order p.
    static NtfFir unit(int order_p = 0);
    /// Prepends a0 = 1 to a1..aP.
    static NtfFir from_tail(std::span<const double> tail);

    [[nodiscard]] const std::vector<double>& coeffs() const noexcept { return coeffs_; }
    [[nodiscard]] int order() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    /// a1..aP.
    [[nodiscard]] std::vector<double> tail() const { return {coeffs_.begin() + 1, coeffs_.end()}; }

    [[nodiscard]] dsp::Complex response(double omega) const;
    /// z-plane zeros of the NTF.
    [[nodiscard]] std::vector<dsp::Complex> zeros() const;

    friend bool operator==(const NtfFir&, const NtfFir&) = default;

private:
    std::vector<double> coeffs_;
};

} // namespace ntfforge
