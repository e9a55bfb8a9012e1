#pragma once

#include "mirsel/dataset.hpp"
#include "mirsel/pipeline.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mirsel {

/// Mean squared error divided by the variance of the target over all samples.
double nmse(const Eigen::Ref<const Eigen::VectorXd>& predictions, const Eigen::Ref<const Eigen::VectorXd>& targets,
            double var_y_all);

/// Shuffles 0..n-1 with `seed` and deals it into l folds whose sizes differ by
/// at most one (the first n % l folds get the extra sample). Each fold is sorted.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t l, std::uint64_t seed);

/// Empirical percentile with linear interpolation between order statistics
/// (position q * (n - 1) in the sorted values), q in [0, 1].
double percentile(std::vector<double> values, double q);
double median(std::vector<double> values);

/// Indices (ascending) of the errors kept after dropping those whose distance
/// to the median error is strictly above the 99th percentile of such distances.
std::vector<std::size_t> trim_outliers(const std::vector<double>& errors);

/// Named axes of candidate values; grid points enumerate the axes in
/// row-major order (last axis fastest). No axes at all means one point.
///
/// Axis names understood by the evaluator: "components", "k", "wsf",
/// "sigma", "gamma". RBFN grids use the order (k, wsf) and LS-SVM grids
/// (sigma, gamma).
struct MetaGrid {
    std::vector<std::string> axes;
    std::vector<std::vector<double>> values;

    std::size_t size() const;
    ModelParams params(std::size_t point) const;
    /// Value of `axis` at `point`; throws if the axis is absent.
    double value(std::size_t point, const std::string& axis) const;
    void validate() const;
};

std::vector<double> log_space(double lo, double hi, std::size_t n);
double median_pairwise_distance(const Eigen::MatrixXd& x);

struct GridOptions {
    std::size_t max_components = 60;
    std::size_t max_k = 30;
    std::size_t n_wsf = 15;
    std::size_t n_sigma = 100;
    std::size_t n_gamma = 300;
};

/// Grid for `spec` on `train` split into `l` folds: component counts up to
/// min(N_fold - 1, M, 60); K up to min(30, N_fold); WSF over [0.1, 10];
/// gamma over [1e-3, 1e6]; sigma over [1e-2, 1e2] times the median pairwise
/// distance of the (projected, whitened) training inputs. N_fold is the
/// smallest fold-training size.
MetaGrid default_grid(const Dataset& train, const PipelineSpec& spec, std::size_t l, const GridOptions& options = {});

struct CvOptions {
    std::size_t folds = 4;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    bool trim_validation = true;
    bool trim_training = false;
    bool trim_test = false;
};

/// Owns the test rows and hands them out once.
class TestSetGuard {
public:
    explicit TestSetGuard(Dataset test) : test_(std::move(test)) {}
    /// Throws std::logic_error on a second call.
    const Dataset& read();
    std::size_t reads() const noexcept { return reads_; }
    std::size_t rows() const noexcept { return test_.rows(); }

private:
    Dataset test_;
    std::size_t reads_ = 0;
};

struct FoldScore {
    double nmse_l = 0.0;
    double nmse_v = 0.0;
    /// Training-row indices dropped from this fold's validation errors.
    std::vector<std::size_t> trimmed;
};

struct PointResult {
    std::vector<FoldScore> folds;
    double mean_l = 0.0;
    double mean_v = 0.0;
    std::string error;  // non-empty when some fold failed to fit

    bool ok() const noexcept { return error.empty(); }
};

struct CvReport {
    PipelineSpec spec;
    MetaGrid grid;
    CvOptions options;
    double var_y_all = 0.0;
    std::vector<std::vector<std::size_t>> folds;
    std::vector<PointResult> points;
    std::size_t winner = 0;
    ModelParams winner_params;
    FittedPipeline final_model;
    /// Grid points whose refit on all training rows failed before one succeeded.
    std::vector<std::size_t> refit_failures;
    double nmse_train = 0.0;
    std::optional<double> nmse_test;
    std::size_t test_trimmed = 0;
    /// KKT residual of the final model, LS-SVM only.
    std::optional<double> kkt_residual;
};

/// Grid search by l-fold cross-validation on `train`, refit of the winner on
/// all of `train`, and, when `test` is given, a single evaluation on it.
CvReport cross_validate(const Dataset& train, const PipelineSpec& spec, const MetaGrid& grid,
                        const CvOptions& options, double var_y_all, TestSetGuard* test = nullptr);

}  // namespace mirsel
