#pragma once

#include "mirsel/dataset.hpp"
#include "mirsel/eval.hpp"
#include "mirsel/mi.hpp"
#include "mirsel/selector.hpp"
#include "mirsel/serialize.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mirsel {

/// One row of the benchmark: how the inputs are reduced and which model follows.
struct MethodInfo {
    int id = 0;
    std::string reduction;  // "PCA", "PLS" or "MI"
    bool whiten = false;
    ModelKind model = ModelKind::Linear;
    std::optional<ProjectionKind> projection;
    bool uses_mi = false;
    /// For methods 3-10: the linear method whose component count is reused.
    int components_from = 0;

    std::string description() const;
};

inline constexpr int kMethodCount = 13;
MethodInfo method_info(int id);

/// A dataset on disk: CSV, target column, optional train/test split.
struct DataSource {
    std::string name;
    Dataset data;  // raw variables
    std::string target;
    std::optional<SplitSpec> split;
    std::string preprocess = "none";
    std::size_t folds = 4;
};

/// Directory searched for dataset manifests: $MIRSEL_DATA_DIR, else ./data.
std::filesystem::path default_data_dir();

/// Resolves `ref` as a manifest path (*.json), or a name looked up as
/// <data_dir>/<name>.json.
DataSource load_data_source(const std::string& ref, const std::filesystem::path& data_dir = default_data_dir());

struct ExperimentConfig {
    std::string dataset = "tecator";
    std::filesystem::path data_dir;  // empty: default_data_dir()
    std::optional<std::string> preprocess;  // overrides the manifest
    int method = 12;
    std::size_t k = 6;
    std::size_t p = 16;
    std::optional<std::size_t> folds;  // overrides the manifest
    std::uint64_t seed = 0;
    unsigned workers = 0;
    std::filesystem::path out = "reports";
    /// Fixed component count for methods 3-10; 0 runs method 1 or 2 to choose it.
    std::size_t components = 0;
    GridOptions grid;
    bool trim_training = false;
    bool trim_test = false;
    bool standardize_mi = false;
    /// Rescale the target to unit variance inside the MI estimator.
    bool standardize_target_mi = true;
    bool iterate_backward = false;
    bool scale_columns = false;

    void validate() const;
};

Json to_json(const ExperimentConfig& c);
/// Fields absent from `j` keep the values already in `c`.
void apply_json(const Json& j, ExperimentConfig& c);

struct MethodOutcome {
    MethodInfo info;
    CvReport cv;
    std::optional<SelectionResult> selection;
    std::vector<std::size_t> columns;  // preprocessed variables fed to the pipeline; empty = all
    std::size_t n_inputs = 0;          // variables (or components) entering the model
    std::filesystem::path report_dir;
    double seconds = 0.0;
    std::size_t test_reads = 0;
};

using ProgressFn = std::function<void(const std::string&)>;

/// A loaded dataset, preprocessed and split, on which methods can be run.
/// Caches the MI selection and the linear component counts so a full
/// benchmark computes each of them once.
class Experiment {
public:
    explicit Experiment(ExperimentConfig config, ProgressFn progress = {});

    const ExperimentConfig& config() const noexcept { return config_; }
    const DataSource& source() const noexcept { return source_; }
    /// Preprocessed training rows.
    const Dataset& train() const noexcept { return train_; }
    std::size_t test_rows() const noexcept { return test_.rows(); }
    std::size_t folds() const noexcept { return folds_; }
    /// Target variance over every sample (training and test).
    double var_y_all() const noexcept { return var_y_all_; }

    /// Individual MI of every preprocessed variable on the training rows, descending.
    std::vector<RankedVariable> estimate() const;
    const SelectionResult& selection();
    /// Component count chosen by cross-validating method 1 (PCA) or 2 (PLS).
    std::size_t linear_components(ProjectionKind kind);

    /// Cross-validates, refits, evaluates once on the test rows and writes
    /// report.json, grid.csv, model.json (and trace.json for MI methods).
    MethodOutcome run_method(int id);
    /// Same pipeline without touching the test rows; returns the model document.
    ModelDocument train_method(int id, CvReport* report = nullptr);

    MetaGrid grid_for(int id);
    /// Grid size `id` will sweep, computed from shapes alone (MI methods
    /// assume P inputs). Nothing is fitted.
    std::size_t planned_grid_size(int id) const;
    std::filesystem::path report_dir(int id) const;

private:
    struct Prepared {
        MethodInfo info;
        PipelineSpec spec;
        Dataset train;
        std::vector<std::size_t> columns;
        MetaGrid grid;
    };
    Prepared prepare(int id);
    ModelDocument document(const Prepared& p, const CvReport& r) const;
    CvOptions cv_options() const;
    void note(const std::string& msg) const;

    ExperimentConfig config_;
    ProgressFn progress_;
    DataSource source_;
    Dataset train_;
    Dataset test_;
    std::size_t folds_ = 4;
    double var_y_all_ = 1.0;
    std::optional<SelectionResult> selection_;
    std::map<ProjectionKind, std::size_t> components_;
};

/// Summary row of a benchmark run.
struct BenchmarkRow {
    int method = 0;
    std::string reduction;
    std::string whitening;
    std::size_t n_inputs = 0;
    std::string model;
    std::optional<double> nmse_test;
    std::string error;
};

/// Markdown table in the layout of the benchmark tables; the two lowest
/// NMSE_T values are bold.
std::string format_benchmark(const std::vector<BenchmarkRow>& rows);

}  // namespace mirsel
