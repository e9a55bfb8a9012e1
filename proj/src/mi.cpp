#include "mirsel/mi.hpp"

#include "mirsel/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

namespace mirsel {

namespace {

double range_of(const Eigen::Ref<const Eigen::VectorXd>& v) { return v.maxCoeff() - v.minCoeff(); }

// A sample can only have eps = 0 on a subset if k + 1 samples share their
// output value and their value on every variable of the subset, which needs
// some single variable with such a group.
bool has_tied_group(const Eigen::MatrixXd& x, const std::vector<double>& y, std::size_t k) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        std::map<std::pair<double, double>, std::size_t> groups;
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            if (++groups[{x(r, c), y[static_cast<std::size_t>(r)]}] >= k + 1) return true;
        }
    }
    return false;
}

}  // namespace

double kraskov_from_stats(std::span<const NeighborhoodStats> stats, std::size_t k, const DigammaTable& psi) {
    const std::size_t n = stats.size();
    if (n == 0) throw ConfigError("no samples");
    std::vector<std::size_t> hist(n + 1, 0);
    for (const auto& st : stats) {
        ++hist[st.n_x];
        ++hist[st.n_y];
    }
    double acc = 0.0;
    for (std::size_t c = 0; c <= n; ++c) {
        if (hist[c] != 0) acc += static_cast<double>(hist[c]) * psi(c + 1);
    }
    return psi(k) - acc / static_cast<double>(n) + psi(n);
}

MiEstimator::MiEstimator(const Dataset& d, MiOptions options)
    : options_(options), x_(d.x()), y_(d.y().data(), d.y().data() + d.y().size()), psi_(d.rows() + 1) {
    if (options_.k == 0) throw ConfigError("k must be at least 1");
    if (options_.k >= d.rows()) {
        throw ConfigError("k = " + std::to_string(options_.k) + " must be smaller than the number of samples (" +
                          std::to_string(d.rows()) + ")");
    }
    if (options_.standardize) {
        for (Eigen::Index c = 0; c < x_.cols(); ++c) {
            if (x_.rows() < 2) break;
            const double sd = std::sqrt(sample_variance(x_.col(c)));
            if (sd > 0.0) x_.col(c) = (x_.col(c).array() - x_.col(c).mean()) / sd;
        }
    }
    if (options_.standardize_target && y_.size() >= 2) {
        const Eigen::Map<const Eigen::VectorXd> y(y_.data(), static_cast<Eigen::Index>(y_.size()));
        const double sd = std::sqrt(sample_variance(y));
        const double mean = y.mean();
        if (sd > 0.0)
            for (double& v : y_) v = (v - mean) / sd;
    }
    const bool tied = options_.jitter == JitterPolicy::Always ||
                      (options_.jitter == JitterPolicy::WhenTied && has_tied_group(x_, y_, options_.k));
    if (tied) {
        std::mt19937_64 rng(options_.jitter_seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::vector<double> x_range(static_cast<std::size_t>(x_.cols()));
        for (Eigen::Index c = 0; c < x_.cols(); ++c) x_range[static_cast<std::size_t>(c)] = range_of(x_.col(c));
        const double y_range = range_of(Eigen::Map<const Eigen::VectorXd>(y_.data(), static_cast<Eigen::Index>(y_.size())));
        // One draw per row shared by all input variables keeps identical columns identical.
        for (Eigen::Index r = 0; r < x_.rows(); ++r) {
            const double u = unit(rng);
            const double v = unit(rng);
            for (Eigen::Index c = 0; c < x_.cols(); ++c) x_(r, c) += kJitterAmplitude * x_range[static_cast<std::size_t>(c)] * u;
            y_[static_cast<std::size_t>(r)] += kJitterAmplitude * y_range * v;
        }
        jittered_ = true;
    }
}

JointSample MiEstimator::joint_sample(std::span<const std::size_t> subset) const {
    if (subset.empty()) throw ConfigError("mutual information needs a non-empty variable subset");
    const std::size_t n = samples();
    const std::size_t dim = subset.size();
    std::vector<double> buf(n * dim);
    for (std::size_t c = 0; c < dim; ++c) {
        if (subset[c] >= variables()) throw ConfigError("variable index " + std::to_string(subset[c]) + " out of range");
        const auto col = x_.col(static_cast<Eigen::Index>(subset[c]));
        for (std::size_t r = 0; r < n; ++r) buf[r * dim + c] = col(static_cast<Eigen::Index>(r));
    }
    return JointSample(std::move(buf), dim, y_);
}

std::vector<NeighborhoodStats> MiEstimator::neighborhood_stats(std::span<const std::size_t> subset) const {
    return all_knn_stats(joint_sample(subset), options_.k, options_.search);
}

MiEstimate MiEstimator::estimate(std::span<const std::size_t> subset) const {
    const auto stats = neighborhood_stats(subset);
    MiEstimate est;
    est.value = kraskov_from_stats(stats, options_.k, psi_);
    est.k = options_.k;
    est.n_samples = samples();
    if (!std::isfinite(est.value)) throw NumericalError("mutual information estimate is not finite");
    return est;
}

MiEstimate estimate_mi(const Dataset& d, std::span<const std::size_t> subset, std::size_t k, MiOptions options) {
    options.k = k;
    return MiEstimator(d, options).estimate(subset);
}

}  // namespace mirsel
