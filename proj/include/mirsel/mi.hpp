#pragma once

#include "mirsel/dataset.hpp"
#include "mirsel/digamma.hpp"
#include "mirsel/neighbors.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mirsel {

/// Mutual information estimate in nats, with the parameters that produced it.
/// The value may be slightly negative for independent variables.
struct MiEstimate {
    double value = 0.0;
    std::size_t k = 0;
    std::size_t n_samples = 0;
};

enum class JitterPolicy {
    Never,
    WhenTied,  // only if some variable has k+1 samples coinciding with it and with the target
    Always,
};

struct MiOptions {
    std::size_t k = 6;
    NeighborSearch search = NeighborSearch::Auto;
    /// Rescale every input variable to unit sample variance before computing distances.
    bool standardize = false;
    /// Rescale the target to unit sample variance before computing distances.
    bool standardize_target = false;
    JitterPolicy jitter = JitterPolicy::WhenTied;
    std::uint64_t jitter_seed = 0;
};

/// Relative amplitude of the tie-breaking noise, as a fraction of each variable's range.
inline constexpr double kJitterAmplitude = 1e-10;

/// psi(k) - <psi(n_x + 1) + psi(n_y + 1)> + psi(N) from per-sample statistics.
/// The average is accumulated through integer histograms of n_x and n_y, so
/// the result does not depend on sample order.
double kraskov_from_stats(std::span<const NeighborhoodStats> stats, std::size_t k, const DigammaTable& psi);

/// Estimation session over one dataset: preprocessing (optional standardizing,
/// tie-breaking jitter) happens once in the constructor and every subset is
/// then estimated against the same prepared data. Thread-safe for concurrent
/// estimate() calls.
class MiEstimator {
public:
    MiEstimator(const Dataset& d, MiOptions options = {});

    MiEstimate estimate(std::span<const std::size_t> subset) const;
    MiEstimate estimate(std::initializer_list<std::size_t> subset) const {
        return estimate(std::span<const std::size_t>(subset.begin(), subset.size()));
    }

    /// Statistics for every sample of the given subset (exposed for audits and tests).
    std::vector<NeighborhoodStats> neighborhood_stats(std::span<const std::size_t> subset) const;
    JointSample joint_sample(std::span<const std::size_t> subset) const;

    std::size_t k() const noexcept { return options_.k; }
    std::size_t samples() const noexcept { return static_cast<std::size_t>(x_.rows()); }
    std::size_t variables() const noexcept { return static_cast<std::size_t>(x_.cols()); }
    bool jittered() const noexcept { return jittered_; }
    const MiOptions& options() const noexcept { return options_; }

private:
    MiOptions options_;
    Eigen::MatrixXd x_;
    std::vector<double> y_;
    DigammaTable psi_;
    bool jittered_ = false;
};

/// One-shot estimate of I(X_subset; Y).
MiEstimate estimate_mi(const Dataset& d, std::span<const std::size_t> subset, std::size_t k = 6,
                       MiOptions options = {});

}  // namespace mirsel
