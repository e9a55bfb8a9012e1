#pragma once

#include "mirsel/baselines.hpp"
#include "mirsel/dataset.hpp"
#include "mirsel/models.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace mirsel {

enum class ModelKind { Linear, Rbfn, Lssvm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// What to fit: optional projection, optional whitening of its scores, then a model.
struct PipelineSpec {
    ModelKind model = ModelKind::Linear;
    std::optional<ProjectionKind> projection;
    /// Fixed component count. 0 with a projection means the count is a
    /// meta-parameter ("components" grid axis).
    std::size_t components = 0;
    bool whiten = false;
    ProjectionOptions projection_options;
    /// Seed for the k-means initialisation of RBFN centroids.
    std::uint64_t model_seed = 0;
};

/// One point of a meta-parameter grid; fields unused by the model are ignored.
struct ModelParams {
    std::size_t components = 0;
    std::size_t k = 0;
    double wsf = 1.0;
    double sigma = 1.0;
    double gamma = 1.0;
};

using FittedModel = std::variant<LinearModel, RbfnModel, LssvmModel>;

struct FittedPipeline {
    PipelineSpec spec;
    ModelParams params;
    std::optional<Projection> projection;
    std::optional<ColumnScaler> whitener;
    FittedModel model;

    /// Inputs as the pipeline saw them before any projection.
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
    /// Projection and whitening only.
    Eigen::MatrixXd features(const Eigen::MatrixXd& x) const;
};

FittedPipeline fit_pipeline(const Dataset& train, const PipelineSpec& spec, const ModelParams& params);

/// Fits the projection and whitening stages only; `model` is left default.
FittedPipeline fit_features(const Dataset& train, const PipelineSpec& spec, const ModelParams& params);

}  // namespace mirsel
