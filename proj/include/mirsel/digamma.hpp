#pragma once

#include <cstddef>
#include <vector>

namespace mirsel {

/// Digamma function psi(t) = d/dt ln Gamma(t) for t > 0.
///
/// Shifts the argument above 10 with psi(t) = psi(t + 1) - 1/t and then uses
/// the asymptotic expansion in 1/t^2; absolute error is below 1e-14 on (0, inf).
/// Throws ConfigError for t <= 0 or non-finite t.
double digamma(double t);

/// psi(1), psi(2), ..., psi(n) built from the harmonic recurrence.
/// The k-NN estimator only ever evaluates psi at positive integers.
class DigammaTable {
public:
    explicit DigammaTable(std::size_t max_argument);

    /// psi(n) for 1 <= n <= max_argument.
    double operator()(std::size_t n) const;
    std::size_t max_argument() const noexcept { return values_.size() - 1; }

private:
    std::vector<double> values_;
};

}  // namespace mirsel
