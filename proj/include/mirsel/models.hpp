#pragma once

#include "mirsel/dataset.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mirsel {

/// Gaussian kernel exp(-(||x - c|| / (sqrt(2) sigma))^2). Throws for sigma <= 0.
double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& c,
                  double sigma);

/// K(i, j) = rbf_kernel(a.row(i), b.row(j), sigma).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double sigma);

/// Squared Euclidean distances between the rows of a and b.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// ---------------------------------------------------------------------------
// RBFN

struct KMeansResult {
    Eigen::MatrixXd centroids;  // K x d
    std::vector<std::size_t> assignment;
    std::size_t iterations = 0;
};

/// Lloyd's algorithm from K distinct data points drawn with `seed`. Empty
/// clusters are re-seeded at the point farthest from its centroid.
KMeansResult kmeans(const Eigen::MatrixXd& x, std::size_t k, std::uint64_t seed, std::size_t max_iterations = 100);

/// Target-blind part of an RBFN: centroids and unscaled local widths.
struct RbfnStructure {
    Eigen::MatrixXd centroids;
    Eigen::VectorXd base_widths;  // mean member distance; nearest-centroid distance for singletons
};

RbfnStructure rbfn_structure(const Eigen::MatrixXd& x, std::size_t k, std::uint64_t seed);

struct RbfnModel {
    Eigen::MatrixXd centroids;
    Eigen::VectorXd widths;
    Eigen::VectorXd weights;
    double bias = 0.0;
    std::size_t k = 0;
    double wsf = 1.0;

    double predict_one(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Output weights and bias by minimum-norm least squares for fixed centroids and widths.
RbfnModel fit_rbfn_weights(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::MatrixXd centroids,
                           Eigen::VectorXd widths);
RbfnModel fit_rbfn(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const RbfnStructure& structure, double wsf);
RbfnModel fit_rbfn(const Dataset& train, std::size_t k, double wsf, std::uint64_t seed);

// ---------------------------------------------------------------------------
// LS-SVM

struct LssvmModel {
    Eigen::MatrixXd support;  // all training inputs
    Eigen::VectorXd alpha;
    /// Low-order parts: the dual coefficients are alpha + alpha_lo in extended
    /// precision. Empty means zero. Large gamma makes |alpha| much larger than
    /// |y|, and double rounding of alpha alone would then break optimality.
    Eigen::VectorXd alpha_lo;
    double bias = 0.0;
    double sigma = 1.0;
    double gamma = 1.0;

    double predict_one(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Solves [[0, 1'], [1, Omega + I/gamma]] [b; alpha] = [0; y] densely.
LssvmModel fit_lssvm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double sigma, double gamma);
LssvmModel fit_lssvm(const Dataset& train, double sigma, double gamma);

/// max_i |alpha_i - gamma (y_i - f(x_i))|, with f evaluated by the kernel expansion.
double lssvm_kkt_residual(const LssvmModel& m, const Eigen::VectorXd& y);

/// LS-SVM solutions for many gamma at a fixed sigma from one eigendecomposition
/// of the kernel matrix. Agrees with fit_lssvm to solver precision.
class LssvmPath {
public:
    LssvmPath(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double sigma);

    /// Refined to the same accuracy as fit_lssvm.
    LssvmModel model(double gamma) const;
    /// Unrefined coefficients (alpha, b); cheap enough for grid scans.
    std::pair<Eigen::VectorXd, double> solve(double gamma) const;
    const Eigen::MatrixXd& kernel() const noexcept { return kernel_; }

private:
    Eigen::MatrixXd x_;
    double sigma_;
    Eigen::MatrixXd kernel_;
    Eigen::MatrixXd eigvecs_;
    Eigen::VectorXd eigvals_;
    Eigen::VectorXd q_ones_;
    Eigen::VectorXd q_y_;
    Eigen::VectorXd y_;
};

// ---------------------------------------------------------------------------
// Linear

struct LinearModel {
    Eigen::VectorXd coefficients;
    double intercept = 0.0;

    double predict_one(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Ordinary least squares with intercept; minimum-norm slopes when rank deficient.
LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
LinearModel fit_linear(const Dataset& train);

}  // namespace mirsel
