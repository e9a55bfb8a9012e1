#pragma once

#include "mirsel/eval.hpp"
#include "mirsel/pipeline.hpp"
#include "mirsel/selector.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace mirsel {

using Json = nlohmann::ordered_json;

inline constexpr int kModelFormatVersion = 1;

Json to_json(const Eigen::MatrixXd& m);
Json to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const Json& j);
Eigen::VectorXd vector_from_json(const Json& j);

Json to_json(const Projection& p);
Projection projection_from_json(const Json& j);

Json to_json(const FittedModel& m);
FittedModel model_from_json(const Json& j);

Json to_json(const PipelineSpec& s);
PipelineSpec pipeline_spec_from_json(const Json& j);
Json to_json(const ModelParams& p, ModelKind kind, bool with_components);

Json to_json(const FittedPipeline& p);
FittedPipeline pipeline_from_json(const Json& j);

/// Self-contained predictor: raw inputs -> row preprocessing -> column
/// selection -> pipeline.
struct ModelDocument {
    std::string preprocess = "none";  // "none" | "spectrum-normalize"
    std::vector<std::string> raw_labels;
    std::string target;
    std::vector<std::size_t> columns;  // into the preprocessed variables; empty = all
    FittedPipeline pipeline;
    Json metadata = Json::object();

    Eigen::VectorXd predict(const Eigen::MatrixXd& raw) const;
};

Json to_json(const ModelDocument& d);
ModelDocument model_document_from_json(const Json& j);
void save_model(const std::filesystem::path& path, const ModelDocument& d);
ModelDocument load_model(const std::filesystem::path& path);

/// Summary of a cross-validation run; per-point scores go to the CSV.
Json to_json(const CvReport& r);
/// One row per (grid point, fold): point, parameter values, fold, nmse_l, nmse_v, trimmed, error.
void write_grid_csv(const std::filesystem::path& path, const CvReport& r);

Json to_json(const SelectionTrace& t, const std::vector<std::string>& labels);
Json to_json(const SelectionResult& r, const std::vector<std::string>& labels);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

}  // namespace mirsel
