#include "mirsel/serialize.hpp"

#include "mirsel/error.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mirsel {

namespace {

// JSON has no NaN; failed grid points carry null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename T>
T field(const Json& j, const char* key) {
    if (!j.contains(key)) throw DataError(std::string("model document is missing '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model document field '") + key + "': " + e.what());
    }
}

Json labelled(const std::vector<std::size_t>& idx, const std::vector<std::string>& labels) {
    Json out = Json::array();
    for (std::size_t i : idx) out.push_back(i < labels.size() ? labels[i] : "x" + std::to_string(i));
    return out;
}

}  // namespace

Json to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json to_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::MatrixXd matrix_from_json(const Json& j) {
    if (!j.is_array()) throw DataError("matrix must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw DataError("ragged matrix in JSON");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from_json(const Json& j) {
    if (!j.is_array()) throw DataError("vector must be an array");
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json to_json(const Projection& p) {
    Json j;
    j["kind"] = to_string(p.kind);
    j["n_components"] = p.n_components();
    j["x_mean"] = to_json(p.x_mean);
    j["x_scale"] = to_json(p.x_scale);
    j["y_mean"] = p.y_mean;
    j["loadings"] = to_json(p.loadings);
    if (p.explained_variance.size() > 0) j["explained_variance"] = to_json(p.explained_variance);
    return j;
}

Projection projection_from_json(const Json& j) {
    Projection p;
    const auto kind = field<std::string>(j, "kind");
    if (kind == "PCA") p.kind = ProjectionKind::PCA;
    else if (kind == "PLS") p.kind = ProjectionKind::PLS;
    else throw DataError("unknown projection kind '" + kind + "'");
    p.x_mean = vector_from_json(j.at("x_mean"));
    p.x_scale = vector_from_json(j.at("x_scale"));
    p.y_mean = field<double>(j, "y_mean");
    p.loadings = matrix_from_json(j.at("loadings"));
    if (j.contains("explained_variance")) p.explained_variance = vector_from_json(j.at("explained_variance"));
    if (p.loadings.rows() != p.x_mean.size() || p.x_scale.size() != p.x_mean.size())
        throw DataError("projection dimensions are inconsistent");
    return p;
}

Json to_json(const FittedModel& m) {
    Json j;
    if (const auto* lin = std::get_if<LinearModel>(&m)) {
        j["kind"] = "linear";
        j["coefficients"] = to_json(lin->coefficients);
        j["intercept"] = lin->intercept;
    } else if (const auto* rb = std::get_if<RbfnModel>(&m)) {
        j["kind"] = "rbfn";
        j["kernel"] = "gaussian";
        j["k"] = rb->k;
        j["wsf"] = rb->wsf;
        j["centroids"] = to_json(rb->centroids);
        j["widths"] = to_json(rb->widths);
        j["weights"] = to_json(rb->weights);
        j["bias"] = rb->bias;
    } else {
        const auto& ls = std::get<LssvmModel>(m);
        j["kind"] = "lssvm";
        j["kernel"] = "gaussian";
        j["sigma"] = ls.sigma;
        j["gamma"] = ls.gamma;
        j["bias"] = ls.bias;
        j["alpha"] = to_json(ls.alpha);
        if (ls.alpha_lo.size() > 0) j["alpha_lo"] = to_json(ls.alpha_lo);
        j["support"] = to_json(ls.support);
    }
    return j;
}

FittedModel model_from_json(const Json& j) {
    const auto kind = field<std::string>(j, "kind");
    if (kind == "linear") {
        LinearModel m;
        m.coefficients = vector_from_json(j.at("coefficients"));
        m.intercept = field<double>(j, "intercept");
        return m;
    }
    if (kind == "rbfn") {
        RbfnModel m;
        m.k = field<std::size_t>(j, "k");
        m.wsf = field<double>(j, "wsf");
        m.centroids = matrix_from_json(j.at("centroids"));
        m.widths = vector_from_json(j.at("widths"));
        m.weights = vector_from_json(j.at("weights"));
        m.bias = field<double>(j, "bias");
        if (m.widths.size() != m.centroids.rows() || m.weights.size() != m.centroids.rows())
            throw DataError("RBFN centroids, widths and weights differ in count");
        return m;
    }
    if (kind == "lssvm") {
        LssvmModel m;
        m.sigma = field<double>(j, "sigma");
        m.gamma = field<double>(j, "gamma");
        m.bias = field<double>(j, "bias");
        m.alpha = vector_from_json(j.at("alpha"));
        if (j.contains("alpha_lo")) m.alpha_lo = vector_from_json(j.at("alpha_lo"));
        m.support = matrix_from_json(j.at("support"));
        if (m.alpha.size() != m.support.rows() || (m.alpha_lo.size() != 0 && m.alpha_lo.size() != m.alpha.size()))
            throw DataError("LS-SVM alpha and support differ in count");
        return m;
    }
    throw DataError("unknown model kind '" + kind + "'");
}

Json to_json(const PipelineSpec& s) {
    Json j;
    j["model"] = to_string(s.model);
    j["projection"] = s.projection ? Json(to_string(*s.projection)) : Json(nullptr);
    j["components"] = s.components;
    j["whiten"] = s.whiten;
    j["scale_columns"] = s.projection_options.scale_columns;
    j["model_seed"] = s.model_seed;
    return j;
}

PipelineSpec pipeline_spec_from_json(const Json& j) {
    PipelineSpec s;
    s.model = model_kind_from_string(field<std::string>(j, "model"));
    if (j.contains("projection") && !j.at("projection").is_null()) {
        const auto kind = j.at("projection").get<std::string>();
        if (kind == "PCA") s.projection = ProjectionKind::PCA;
        else if (kind == "PLS") s.projection = ProjectionKind::PLS;
        else throw DataError("unknown projection kind '" + kind + "'");
    }
    s.components = j.value("components", std::size_t{0});
    s.whiten = j.value("whiten", false);
    s.projection_options.scale_columns = j.value("scale_columns", false);
    s.model_seed = j.value("model_seed", std::uint64_t{0});
    return s;
}

Json to_json(const ModelParams& p, ModelKind kind, bool with_components) {
    Json j = Json::object();
    if (with_components) j["components"] = p.components;
    if (kind == ModelKind::Rbfn) {
        j["k"] = p.k;
        j["wsf"] = p.wsf;
    } else if (kind == ModelKind::Lssvm) {
        j["sigma"] = p.sigma;
        j["gamma"] = p.gamma;
    }
    return j;
}

Json to_json(const FittedPipeline& p) {
    Json j;
    j["spec"] = to_json(p.spec);
    j["params"] = to_json(p.params, p.spec.model, p.spec.projection.has_value());
    j["projection"] = p.projection ? to_json(*p.projection) : Json(nullptr);
    if (p.whitener) {
        j["whitener"] = {{"mean", to_json(p.whitener->mean())}, {"scale", to_json(p.whitener->scale())}};
    } else {
        j["whitener"] = nullptr;
    }
    j["model"] = to_json(p.model);
    return j;
}

FittedPipeline pipeline_from_json(const Json& j) {
    FittedPipeline p;
    p.spec = pipeline_spec_from_json(j.at("spec"));
    const Json& params = j.at("params");
    p.params.components = params.value("components", std::size_t{0});
    p.params.k = params.value("k", std::size_t{0});
    p.params.wsf = params.value("wsf", 1.0);
    p.params.sigma = params.value("sigma", 1.0);
    p.params.gamma = params.value("gamma", 1.0);
    if (!j.at("projection").is_null()) p.projection = projection_from_json(j.at("projection"));
    if (!j.at("whitener").is_null()) {
        p.whitener = ColumnScaler::from_parts(vector_from_json(j.at("whitener").at("mean")),
                                              vector_from_json(j.at("whitener").at("scale")));
    }
    p.model = model_from_json(j.at("model"));
    return p;
}

Eigen::VectorXd ModelDocument::predict(const Eigen::MatrixXd& raw) const {
    if (!raw_labels.empty() && static_cast<std::size_t>(raw.cols()) != raw_labels.size()) {
        throw DataError("model expects " + std::to_string(raw_labels.size()) + " input variables, got " +
                        std::to_string(raw.cols()));
    }
    Dataset d(raw, Eigen::VectorXd::Zero(raw.rows()));
    if (preprocess == "spectrum-normalize") d = normalize_spectra(d);
    else if (preprocess != "none") throw DataError("unknown preprocessing '" + preprocess + "'");
    if (!columns.empty()) d = d.select_columns(columns);
    return pipeline.predict(d.x());
}

Json to_json(const ModelDocument& d) {
    Json j;
    j["format"] = "mirsel-model";
    j["version"] = kModelFormatVersion;
    j["preprocess"] = d.preprocess;
    j["target"] = d.target;
    j["raw_labels"] = d.raw_labels;
    j["columns"] = d.columns;
    j["pipeline"] = to_json(d.pipeline);
    j["metadata"] = d.metadata;
    return j;
}

ModelDocument model_document_from_json(const Json& j) {
    if (j.value("format", std::string{}) != "mirsel-model") throw DataError("not a model document");
    const int version = field<int>(j, "version");
    if (version != kModelFormatVersion) {
        throw DataError("unsupported model format version " + std::to_string(version) + " (expected " +
                        std::to_string(kModelFormatVersion) + ")");
    }
    ModelDocument d;
    try {
        d.preprocess = field<std::string>(j, "preprocess");
        d.target = j.value("target", std::string{});
        d.raw_labels = j.value("raw_labels", std::vector<std::string>{});
        d.columns = j.value("columns", std::vector<std::size_t>{});
        d.pipeline = pipeline_from_json(field<Json>(j, "pipeline"));
        d.metadata = j.value("metadata", Json::object());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    }
    return d;
}

void save_model(const std::filesystem::path& path, const ModelDocument& d) { write_json(path, to_json(d)); }

ModelDocument load_model(const std::filesystem::path& path) {
    try {
        return model_document_from_json(read_json(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

Json to_json(const CvReport& r) {
    Json j;
    j["pipeline"] = to_json(r.spec);
    Json grid = Json::object();
    for (std::size_t a = 0; a < r.grid.axes.size(); ++a) {
        const auto& v = r.grid.values[a];
        grid[r.grid.axes[a]] = {{"count", v.size()}, {"min", v.front()}, {"max", v.back()}};
    }
    j["grid"] = grid;
    j["grid_points"] = r.grid.size();
    std::size_t failed = 0;
    for (const auto& p : r.points) failed += p.ok() ? 0 : 1;
    j["failed_points"] = failed;
    j["folds"] = r.options.folds;
    j["fold_seed"] = r.options.seed;
    j["fold_sizes"] = Json::array();
    for (const auto& f : r.folds) j["fold_sizes"].push_back(f.size());
    j["fold_indices"] = r.folds;
    j["trim"] = {{"validation", r.options.trim_validation},
                 {"training", r.options.trim_training},
                 {"test", r.options.trim_test}};
    j["var_y_all"] = r.var_y_all;

    const PointResult& w = r.points[r.winner];
    Json win;
    win["point"] = r.winner;
    win["params"] = to_json(r.winner_params, r.spec.model, r.spec.projection.has_value() && r.spec.components == 0);
    win["nmse_l"] = number(w.mean_l);
    win["nmse_v"] = number(w.mean_v);
    win["per_fold"] = Json::array();
    for (const auto& f : w.folds) {
        win["per_fold"].push_back({{"nmse_l", number(f.nmse_l)}, {"nmse_v", number(f.nmse_v)}, {"trimmed", f.trimmed}});
    }
    j["winner"] = win;
    j["refit_failures"] = r.refit_failures;
    j["nmse_train"] = number(r.nmse_train);
    j["nmse_test"] = r.nmse_test ? number(*r.nmse_test) : Json(nullptr);
    if (r.options.trim_test) j["test_trimmed"] = r.test_trimmed;
    if (r.kkt_residual) j["kkt_residual"] = *r.kkt_residual;
    return j;
}

void write_grid_csv(const std::filesystem::path& path, const CvReport& r) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << std::setprecision(17);
    out << "point";
    for (const auto& a : r.grid.axes) out << ',' << a;
    out << ",fold,nmse_l,nmse_v,trimmed,error\n";
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        const PointResult& p = r.points[i];
        for (std::size_t f = 0; f < p.folds.size(); ++f) {
            out << i;
            for (const auto& a : r.grid.axes) out << ',' << r.grid.value(i, a);
            out << ',' << f << ',';
            if (p.ok()) out << p.folds[f].nmse_l << ',' << p.folds[f].nmse_v << ',' << p.folds[f].trimmed.size() << ',';
            else out << ",,,";
            std::string err = p.error;
            for (char& c : err)
                if (c == ',' || c == '\n' || c == '"') c = ';';
            out << err << '\n';
        }
    }
}

Json to_json(const SelectionTrace& t, const std::vector<std::string>& labels) {
    Json steps = Json::array();
    for (const auto& s : t.steps) {
        Json step;
        step["kind"] = to_string(s.kind);
        step["candidate"] = s.candidate ? Json(*s.candidate) : Json(nullptr);
        step["subset"] = s.subset;
        step["subset_labels"] = labelled(s.subset, labels);
        step["mi"] = s.mi;
        step["decision"] = s.decision;
        steps.push_back(std::move(step));
    }
    return steps;
}

Json to_json(const SelectionResult& r, const std::vector<std::string>& labels) {
    auto subset = [&](const VariableSubset& s) {
        return Json{{"indices", s.indices}, {"labels", labelled(s.indices, labels)}, {"provenance", to_string(s.provenance)}};
    };
    Json j;
    Json ranking = Json::array();
    for (const auto& v : r.ranking) {
        ranking.push_back({{"column", v.column}, {"label", labelled({v.column}, labels)[0]}, {"mi", v.mi}});
    }
    j["a"] = subset(r.a);
    j["b"] = subset(r.b);
    j["b_mi"] = r.b_mi;
    j["c"] = subset(r.c);
    j["selected"] = subset(r.selected);
    j["selected_mi"] = r.selected_mi;
    j["subsets_evaluated"] = r.subsets_evaluated;
    j["ranking"] = ranking;
    return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace mirsel
