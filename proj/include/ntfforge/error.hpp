#pragma once

#include <stdexcept>
#include <string>

namespace ntfforge {

enum class ErrorKind {
    InvalidSpec,
    Conditioning,
    TruncationOverflow,
    Evaluation,
    InvalidPolynomial,
    DegenerateFilter,
    DegenerateOrder,
    InvalidBand,
    BoundViolation,
    Extraction,
    CausalityViolation,
    Input,
    UndefinedSnr,
    Solver,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit code without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid spec";
    case ErrorKind::Conditioning: return "conditioning";
    case ErrorKind::TruncationOverflow: return "truncation overflow";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::InvalidPolynomial: return "invalid polynomial";
    case ErrorKind::DegenerateFilter: return "degenerate filter";
    case ErrorKind::DegenerateOrder: return "degenerate order";
    case ErrorKind::InvalidBand: return "invalid band";
    case ErrorKind::BoundViolation: return "bound violation";
    case ErrorKind::Extraction: return "extraction";
    case ErrorKind::CausalityViolation: return "causality violation";
    case ErrorKind::Input: return "input";
    case ErrorKind::UndefinedSnr: return "undefined snr";
    case ErrorKind::Solver: return "solver";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

} // namespace ntfforge
