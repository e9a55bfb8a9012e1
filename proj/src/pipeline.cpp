#include "mirsel/pipeline.hpp"

#include "mirsel/error.hpp"

namespace mirsel {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Linear: return "linear";
        case ModelKind::Rbfn: return "rbfn";
        case ModelKind::Lssvm: return "lssvm";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "linear") return ModelKind::Linear;
    if (name == "rbfn") return ModelKind::Rbfn;
    if (name == "lssvm") return ModelKind::Lssvm;
    throw ConfigError("unknown model kind '" + name + "' (expected linear, rbfn or lssvm)");
}

Eigen::MatrixXd FittedPipeline::features(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd f = projection ? transform(*projection, x) : x;
    if (whitener) f = whitener->apply(f);
    return f;
}

Eigen::VectorXd FittedPipeline::predict(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd f = features(x);
    return std::visit([&](const auto& m) { return m.predict(f); }, model);
}

FittedPipeline fit_features(const Dataset& train, const PipelineSpec& spec, const ModelParams& params) {
    FittedPipeline out;
    out.spec = spec;
    out.params = params;
    Dataset features = train;
    if (spec.projection) {
        const std::size_t n = spec.components > 0 ? spec.components : params.components;
        Projection p = *spec.projection == ProjectionKind::PCA ? fit_pca(train, n, spec.projection_options)
                                                               : fit_pls(train, n, spec.projection_options);
        if (p.n_components() < n) {
            throw NumericalError("PLS found only " + std::to_string(p.n_components()) + " of " + std::to_string(n) +
                                 " components");
        }
        features = transform(p, train);
        out.projection = std::move(p);
    }
    if (spec.whiten) {
        out.whitener = ColumnScaler::fit(features.x(), features.labels());
    }
    return out;
}

FittedPipeline fit_pipeline(const Dataset& train, const PipelineSpec& spec, const ModelParams& params) {
    FittedPipeline out = fit_features(train, spec, params);
    const Dataset features = train.with_x(out.features(train.x()));
    switch (spec.model) {
        case ModelKind::Linear: out.model = fit_linear(features); break;
        case ModelKind::Rbfn: out.model = fit_rbfn(features, params.k, params.wsf, spec.model_seed); break;
        case ModelKind::Lssvm: out.model = fit_lssvm(features, params.sigma, params.gamma); break;
    }
    return out;
}

}  // namespace mirsel
