#pragma once

#include "mirsel/dataset.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace testutil {

inline std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
    auto dir = std::filesystem::temp_directory_path() / "mirsel_tests";
    std::filesystem::create_directories(dir);
    auto path = dir / name;
    std::ofstream(path) << contents;
    return path;
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "mirsel_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline Eigen::MatrixXd uniform_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo = 0.0,
                                      double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
    return m;
}

inline Eigen::MatrixXd normal_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = g(rng);
    return m;
}

/// Two-pass sample variance (n - 1) of one column, independent of the library's helper.
inline double column_variance(const Eigen::MatrixXd& m, Eigen::Index c) {
    const double mean = m.col(c).sum() / static_cast<double>(m.rows());
    double acc = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) acc += (m(r, c) - mean) * (m(r, c) - mean);
    return acc / static_cast<double>(m.rows() - 1);
}

/// Bivariate Gaussian sample with correlation rho: returns (x, y) as a dataset with one variable.
inline mirsel::Dataset gaussian_pair(std::mt19937_64& rng, Eigen::Index n, double rho) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = g(rng);
        const double b = g(rng);
        x(i, 0) = a;
        y(i) = rho * a + std::sqrt(1.0 - rho * rho) * b;
    }
    return mirsel::Dataset(x, y);
}

}  // namespace testutil
