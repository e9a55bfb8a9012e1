#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mirsel {

/// Samples x variables matrix with a scalar target per sample.
///
/// Immutable once constructed; the constructor enforces the shape and
/// finiteness invariants so every Dataset in flight is well formed.
class Dataset {
public:
    Dataset() = default;
    Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::string> labels = {});

    const Eigen::MatrixXd& x() const noexcept { return x_; }
    const Eigen::VectorXd& y() const noexcept { return y_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    std::size_t rows() const noexcept { return static_cast<std::size_t>(x_.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(x_.cols()); }

    /// Variable label, or "x<j>" when the dataset carries none.
    std::string label(std::size_t column) const;

    Dataset select_rows(std::span<const std::size_t> rows) const;
    Dataset select_columns(std::span<const std::size_t> columns) const;
    Dataset with_x(Eigen::MatrixXd x, std::vector<std::string> labels = {}) const;
    Dataset with_y(Eigen::VectorXd y) const;

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    std::vector<std::string> labels_;
};

/// Disjoint train/test row indices (0-based).
struct SplitSpec {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;

    void validate(std::size_t n_rows) const;
};

/// Target column: either a header name or a 0-based index (negative counts from the end).
using TargetColumn = std::variant<std::string, long>;

enum class HeaderMode { Auto, Present, Absent };

/// Raw numeric table; `names` is empty when the file has no header row.
struct CsvTable {
    std::vector<std::string> names;
    Eigen::MatrixXd values;
};

CsvTable read_csv_table(const std::filesystem::path& path, HeaderMode header = HeaderMode::Auto);

/// Reads a comma-separated numeric file. Aborts on the first unparsable or
/// non-finite cell, reporting its 1-based line and column.
Dataset load_csv(const std::filesystem::path& path, const TargetColumn& target,
                 HeaderMode header = HeaderMode::Auto);

void save_csv(const std::filesystem::path& path, const Dataset& d, const std::string& target_name = "target");

SplitSpec load_split_json(const std::filesystem::path& path);
void save_split_json(const std::filesystem::path& path, const SplitSpec& split);

std::pair<Dataset, Dataset> apply_split(const Dataset& d, const SplitSpec& split);

/// Concatenates two datasets row-wise (same variables).
Dataset stack_rows(const Dataset& top, const Dataset& bottom);

/// Sample variance (denominator n-1). Requires n >= 2.
double sample_variance(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Standardizes every row to zero mean and unit sample standard deviation and
/// appends the removed row mean and standard deviation as two extra variables.
Dataset normalize_spectra(const Dataset& d);

/// Per-column affine map x -> (x - mean) / sd, fitted on training rows only.
class ColumnScaler {
public:
    static ColumnScaler fit(const Eigen::MatrixXd& train, const std::vector<std::string>& labels = {});
    /// Rebuilds a stored scaler; every scale must be positive.
    static ColumnScaler from_parts(Eigen::VectorXd mean, Eigen::VectorXd scale);

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Dataset apply(const Dataset& d) const;

    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const Eigen::VectorXd& scale() const noexcept { return scale_; }

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd scale_;
};

/// Whitens `train` column-wise and applies the same map to `test`.
std::pair<Dataset, Dataset> whiten_columns(const Dataset& train, const Dataset& test);
Dataset whiten_columns(const Dataset& d);

}  // namespace mirsel
