#pragma once

#include "mirsel/dataset.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>

namespace mirsel {

enum class ProjectionKind { PCA, PLS };

std::string to_string(ProjectionKind kind);

/// Linear map x -> ((x - x_mean) ./ x_scale) * loadings.
///
/// For PLS the loadings are the weight matrix W (P'W)^-1, so scores come
/// straight from the original (centered) inputs without deflation. Both
/// kinds can be truncated to their leading components.
struct Projection {
    ProjectionKind kind = ProjectionKind::PCA;
    Eigen::MatrixXd loadings;  // M x n_components
    Eigen::VectorXd x_mean;
    Eigen::VectorXd x_scale;  // all ones unless column scaling was requested
    double y_mean = 0.0;      // PLS target center; 0 for PCA
    /// PCA: variance of each score on the training rows. PLS: empty.
    Eigen::VectorXd explained_variance;

    std::size_t n_components() const noexcept { return static_cast<std::size_t>(loadings.cols()); }
    std::size_t input_dim() const noexcept { return static_cast<std::size_t>(loadings.rows()); }

    Projection truncated(std::size_t n) const;
};

struct ProjectionOptions {
    bool scale_columns = false;
};

Projection fit_pca(const Dataset& train, std::size_t n_components, const ProjectionOptions& options = {});

/// PLS1 by iterative deflation. Stops early, with fewer components than
/// requested, once the deflated inputs carry no covariance with the target.
Projection fit_pls(const Dataset& train, std::size_t n_components, const ProjectionOptions& options = {});

Eigen::MatrixXd transform(const Projection& p, const Eigen::MatrixXd& x);
/// Scores as a new dataset ("pc1".. or "pls1"..); the target passes through.
Dataset transform(const Projection& p, const Dataset& d);

/// Largest component count the projections accept: min(N - 1, M).
std::size_t max_components(std::size_t n_rows, std::size_t n_cols);

}  // namespace mirsel
