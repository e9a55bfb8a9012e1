#include "mirsel/digamma.hpp"

#include "mirsel/error.hpp"

#include <cmath>
#include <string>

namespace mirsel {

namespace {
constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
}

double digamma(double t) {
    if (!std::isfinite(t) || t <= 0.0) throw ConfigError("digamma: argument must be positive, got " + std::to_string(t));
    double shift = 0.0;
    while (t < 10.0) {
        shift -= 1.0 / t;
        t += 1.0;
    }
    // ln t - 1/(2t) - sum B_2n / (2n t^2n), Bernoulli terms through t^-14.
    const double inv2 = 1.0 / (t * t);
    const double series =
        inv2 * (1.0 / 12 -
                inv2 * (1.0 / 120 -
                        inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 -
                                                                                          inv2 * (1.0 / 12)))))));
    return shift + std::log(t) - 0.5 / t - series;
}

DigammaTable::DigammaTable(std::size_t max_argument) : values_(max_argument + 1, 0.0) {
    if (max_argument == 0) return;
    values_[1] = -kEulerGamma;
    // Beyond a few thousand the recurrence accumulates ~n ulp; switch to the series.
    constexpr std::size_t kRecurrenceLimit = 64;
    for (std::size_t n = 2; n <= max_argument; ++n) {
        values_[n] = n <= kRecurrenceLimit ? values_[n - 1] + 1.0 / static_cast<double>(n - 1)
                                           : digamma(static_cast<double>(n));
    }
}

double DigammaTable::operator()(std::size_t n) const {
    if (n == 0 || n >= values_.size()) throw ConfigError("digamma table: argument " + std::to_string(n) + " out of range");
    return values_[n];
}

}  // namespace mirsel
