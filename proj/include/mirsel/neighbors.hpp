#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace mirsel {

/// Per-sample statistics of the k-NN mutual information estimator.
///
/// eps is the max-norm distance from z_i = (x_i, y_i) to its k-th nearest
/// neighbour; n_x and n_y count the other samples strictly closer than eps
/// in the input and output spaces.
struct NeighborhoodStats {
    double eps = 0.0;
    std::size_t n_x = 0;
    std::size_t n_y = 0;

    friend bool operator==(const NeighborhoodStats&, const NeighborhoodStats&) = default;
};

/// N points with a dim-dimensional input part (row-major) and a scalar output.
class JointSample {
public:
    JointSample(std::vector<double> x_row_major, std::size_t dim, std::vector<double> y);

    std::size_t size() const noexcept { return y_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const double* x(std::size_t i) const noexcept { return x_.data() + i * dim_; }
    double y(std::size_t i) const noexcept { return y_[i]; }
    std::span<const double> sorted_y() const noexcept { return sorted_y_; }

private:
    std::vector<double> x_;
    std::size_t dim_;
    std::vector<double> y_;
    std::vector<double> sorted_y_;
};

/// Euclidean distance, accumulated in dimension order. Every search path
/// goes through this function so that results are bit-identical.
inline double input_distance(const double* a, const double* b, std::size_t dim) noexcept;

/// Max-norm distance on the joint space: max(||x - x'||, |y - y'|).
double joint_distance(const JointSample& s, std::size_t i, std::size_t j) noexcept;

enum class NeighborSearch { Auto, BruteForce, KdTree };

/// Exact statistics for sample i by scanning every other sample.
NeighborhoodStats knn_stats_brute(const JointSample& s, std::size_t i, std::size_t k);

/// Exact k-NN and strict range counting with a kd-tree over the joint space.
/// Box lower bounds are computed with the same floating-point operations as
/// the point distances, so pruning never changes the result.
class JointKdTree {
public:
    explicit JointKdTree(const JointSample& s, std::size_t leaf_size = 8);
    ~JointKdTree();
    JointKdTree(JointKdTree&&) noexcept;
    JointKdTree& operator=(JointKdTree&&) noexcept;

    /// Distance from sample i to its k-th nearest other sample.
    double kth_distance(std::size_t i, std::size_t k) const;
    /// Number of samples j != i with input distance strictly below radius.
    std::size_t count_input_within(std::size_t i, double radius) const;

    NeighborhoodStats stats(std::size_t i, std::size_t k) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Number of samples j != i with |y_j - y_i| < radius, via binary search on sorted outputs.
std::size_t count_output_within(const JointSample& s, std::size_t i, double radius);

/// Statistics for sample i with the requested strategy.
NeighborhoodStats knn_stats(const JointSample& s, std::size_t i, std::size_t k,
                            NeighborSearch search = NeighborSearch::BruteForce);

/// Statistics for every sample. Auto picks the kd-tree for large, low-dimensional samples.
std::vector<NeighborhoodStats> all_knn_stats(const JointSample& s, std::size_t k,
                                             NeighborSearch search = NeighborSearch::Auto);

NeighborSearch resolve_search(NeighborSearch search, std::size_t n, std::size_t dim) noexcept;

inline double input_distance(const double* a, const double* b, std::size_t dim) noexcept {
    double acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
        const double d = a[c] - b[c];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace mirsel
