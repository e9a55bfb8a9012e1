#include "mirsel/experiment.hpp"

#include "mirsel/error.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <set>
#include <sstream>

namespace mirsel {

std::string MethodInfo::description() const {
    std::string s = reduction;
    if (whiten) s += " + whitening";
    const char* names[] = {"linear", "RBFN", "LS-SVM"};
    return s + " + " + names[static_cast<int>(model)];
}

MethodInfo method_info(int id) {
    MethodInfo m;
    m.id = id;
    if (id == 1 || id == 2) {
        m.projection = id == 1 ? ProjectionKind::PCA : ProjectionKind::PLS;
        m.reduction = to_string(*m.projection);
        m.model = ModelKind::Linear;
        return m;
    }
    if (id >= 3 && id <= 10) {
        // 3-6 PCA, 7-10 PLS; whitening alternates; RBFN then LS-SVM in pairs.
        const int offset = id - 3;
        m.projection = offset < 4 ? ProjectionKind::PCA : ProjectionKind::PLS;
        m.reduction = to_string(*m.projection);
        m.whiten = offset % 2 == 1;
        m.model = (offset % 4) < 2 ? ModelKind::Rbfn : ModelKind::Lssvm;
        m.components_from = offset < 4 ? 1 : 2;
        return m;
    }
    if (id >= 11 && id <= 13) {
        m.reduction = "MI";
        m.uses_mi = true;
        m.model = id == 11 ? ModelKind::Rbfn : id == 12 ? ModelKind::Lssvm : ModelKind::Linear;
        return m;
    }
    throw ConfigError("method must be between 1 and " + std::to_string(kMethodCount) + " (got " + std::to_string(id) +
                      ")");
}

std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("MIRSEL_DATA_DIR"); env && *env) return env;
    return "data";
}

DataSource load_data_source(const std::string& ref, const std::filesystem::path& data_dir) {
    std::filesystem::path manifest = ref;
    if (manifest.extension() != ".json") manifest = data_dir / (ref + ".json");
    if (!std::filesystem::exists(manifest)) {
        throw DataError("dataset '" + ref + "' not found (looked for " + manifest.string() +
                        "); run `mirsel fetch-data` or set MIRSEL_DATA_DIR");
    }
    const Json j = read_json(manifest);
    const auto base = manifest.parent_path();
    DataSource s;
    try {
        s.name = j.value("name", manifest.stem().string());
        s.target = j.at("target").get<std::string>();
        s.data = load_csv(base / j.at("csv").get<std::string>(), s.target, HeaderMode::Present);
        if (j.contains("split") && !j.at("split").is_null()) {
            s.split = load_split_json(base / j.at("split").get<std::string>());
            s.split->validate(s.data.rows());
        }
        s.preprocess = j.value("preprocess", std::string("none"));
        s.folds = j.value("folds", std::size_t{4});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(manifest.string() + ": " + e.what());
    }
    return s;
}

void ExperimentConfig::validate() const {
    method_info(method);
    if (k == 0) throw ConfigError("k must be at least 1");
    if (p == 0 || p > 20) throw ConfigError("P must lie in 1..20 (got " + std::to_string(p) + ")");
    if (folds && *folds < 2) throw ConfigError("at least two folds are needed");
    if (preprocess && *preprocess != "none" && *preprocess != "spectrum-normalize")
        throw ConfigError("preprocessing must be 'none' or 'spectrum-normalize'");
    if (grid.n_wsf == 0 || grid.n_sigma == 0 || grid.n_gamma == 0 || grid.max_k == 0 || grid.max_components == 0)
        throw ConfigError("grid sizes must be positive");
}

Json to_json(const ExperimentConfig& c) {
    Json j;
    j["dataset"] = c.dataset;
    j["data_dir"] = c.data_dir.string();
    j["preprocess"] = c.preprocess ? Json(*c.preprocess) : Json(nullptr);
    j["method"] = c.method;
    j["k"] = c.k;
    j["p"] = c.p;
    j["folds"] = c.folds ? Json(*c.folds) : Json(nullptr);
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["out"] = c.out.string();
    j["components"] = c.components;
    j["grid"] = {{"max_components", c.grid.max_components},
                 {"max_k", c.grid.max_k},
                 {"n_wsf", c.grid.n_wsf},
                 {"n_sigma", c.grid.n_sigma},
                 {"n_gamma", c.grid.n_gamma}};
    j["trim_training"] = c.trim_training;
    j["trim_test"] = c.trim_test;
    j["standardize_mi"] = c.standardize_mi;
    j["standardize_target_mi"] = c.standardize_target_mi;
    j["iterate_backward"] = c.iterate_backward;
    j["scale_columns"] = c.scale_columns;
    return j;
}

void apply_json(const Json& j, ExperimentConfig& c) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    static const std::set<std::string> known = {
        "dataset", "data_dir", "preprocess", "method", "k", "p", "folds", "seed", "workers", "out", "components",
        "grid", "trim_training", "trim_test", "standardize_mi", "standardize_target_mi", "iterate_backward",
        "scale_columns"};
    try {
        for (const auto& [key, value] : j.items()) {
            if (!known.count(key)) throw ConfigError("unknown configuration key '" + key + "'");
            if (value.is_null()) {
                if (key == "preprocess") c.preprocess.reset();
                else if (key == "folds") c.folds.reset();
                continue;
            }
            if (key == "dataset") c.dataset = value.get<std::string>();
            else if (key == "data_dir") c.data_dir = value.get<std::string>();
            else if (key == "preprocess") c.preprocess = value.get<std::string>();
            else if (key == "method") c.method = value.get<int>();
            else if (key == "k") c.k = value.get<std::size_t>();
            else if (key == "p") c.p = value.get<std::size_t>();
            else if (key == "folds") c.folds = value.get<std::size_t>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "workers") c.workers = value.get<unsigned>();
            else if (key == "out") c.out = value.get<std::string>();
            else if (key == "components") c.components = value.get<std::size_t>();
            else if (key == "trim_training") c.trim_training = value.get<bool>();
            else if (key == "trim_test") c.trim_test = value.get<bool>();
            else if (key == "standardize_mi") c.standardize_mi = value.get<bool>();
            else if (key == "standardize_target_mi") c.standardize_target_mi = value.get<bool>();
            else if (key == "iterate_backward") c.iterate_backward = value.get<bool>();
            else if (key == "scale_columns") c.scale_columns = value.get<bool>();
            else if (key == "grid") {
                for (const auto& [gk, gv] : value.items()) {
                    if (gk == "max_components") c.grid.max_components = gv.get<std::size_t>();
                    else if (gk == "max_k") c.grid.max_k = gv.get<std::size_t>();
                    else if (gk == "n_wsf") c.grid.n_wsf = gv.get<std::size_t>();
                    else if (gk == "n_sigma") c.grid.n_sigma = gv.get<std::size_t>();
                    else if (gk == "n_gamma") c.grid.n_gamma = gv.get<std::size_t>();
                    else throw ConfigError("unknown grid key '" + gk + "'");
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("configuration: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

Experiment::Experiment(ExperimentConfig config, ProgressFn progress)
    : config_(std::move(config)), progress_(std::move(progress)) {
    config_.validate();
    source_ = load_data_source(config_.dataset, config_.data_dir.empty() ? default_data_dir() : config_.data_dir);
    const std::string preprocess = config_.preprocess.value_or(source_.preprocess);
    if (preprocess != "none" && preprocess != "spectrum-normalize")
        throw DataError("dataset asks for unknown preprocessing '" + preprocess + "'");
    config_.preprocess = preprocess;
    const Dataset all = preprocess == "spectrum-normalize" ? normalize_spectra(source_.data) : source_.data;
    if (source_.split) {
        std::tie(train_, test_) = apply_split(all, *source_.split);
    } else {
        train_ = all;
    }
    folds_ = config_.folds.value_or(source_.folds);
    var_y_all_ = sample_variance(all.y());
    if (!(var_y_all_ > 0.0)) throw DataError("the target is constant; NMSE is undefined");
}

void Experiment::note(const std::string& msg) const {
    if (progress_) progress_(msg);
}

CvOptions Experiment::cv_options() const {
    CvOptions o;
    o.folds = folds_;
    o.seed = config_.seed;
    o.workers = config_.workers;
    o.trim_training = config_.trim_training;
    o.trim_test = config_.trim_test;
    return o;
}

std::vector<RankedVariable> Experiment::estimate() const {
    MiOptions mo;
    mo.k = config_.k;
    mo.standardize = config_.standardize_mi;
    mo.standardize_target = config_.standardize_target_mi;
    mo.jitter_seed = config_.seed;
    const MiEstimator est(train_, mo);
    return Selector(est, {.workers = config_.workers}).rank_all();
}

const SelectionResult& Experiment::selection() {
    if (!selection_) {
        note("selecting variables by mutual information (k = " + std::to_string(config_.k) +
             ", P = " + std::to_string(config_.p) + ")");
        MiOptions mo;
        mo.k = config_.k;
        mo.standardize = config_.standardize_mi;
        mo.standardize_target = config_.standardize_target_mi;
    mo.standardize_target = config_.standardize_target_mi;
        mo.jitter_seed = config_.seed;
        const MiEstimator est(train_, mo);
        SelectorOptions so;
        so.workers = config_.workers;
        so.iterate_backward = config_.iterate_backward;
        selection_ = select_variables(est, config_.p, so);
        std::string names;
        for (std::size_t c : selection_->selected.indices) names += " " + train_.label(c);
        note("selected " + std::to_string(selection_->selected.size()) + " variables:" + names);
    }
    return *selection_;
}

std::size_t Experiment::linear_components(ProjectionKind kind) {
    if (config_.components > 0) return config_.components;
    auto it = components_.find(kind);
    if (it != components_.end()) return it->second;
    const int id = kind == ProjectionKind::PCA ? 1 : 2;
    note("choosing the " + to_string(kind) + " component count by cross-validating method " + std::to_string(id));
    Prepared p = prepare(id);
    const CvReport r = cross_validate(p.train, p.spec, p.grid, cv_options(), var_y_all_);
    components_[kind] = r.winner_params.components;
    return r.winner_params.components;
}

Experiment::Prepared Experiment::prepare(int id) {
    Prepared p;
    p.info = method_info(id);
    p.spec.model = p.info.model;
    p.spec.projection = p.info.projection;
    p.spec.whiten = p.info.whiten;
    p.spec.model_seed = config_.seed;
    p.spec.projection_options.scale_columns = config_.scale_columns;
    p.train = train_;
    if (p.info.uses_mi) {
        p.columns = selection().selected.indices;
        p.train = train_.select_columns(p.columns);
    }
    if (p.info.components_from != 0) p.spec.components = linear_components(*p.info.projection);
    p.grid = default_grid(p.train, p.spec, folds_, config_.grid);
    return p;
}

MetaGrid Experiment::grid_for(int id) { return prepare(id).grid; }

std::size_t Experiment::planned_grid_size(int id) const {
    const MethodInfo info = method_info(id);
    const std::size_t n = train_.rows();
    const std::size_t n_fold = n - (n + folds_ - 1) / folds_;
    switch (info.model) {
        case ModelKind::Linear:
            if (info.projection) return std::min(max_components(n_fold, train_.cols()), config_.grid.max_components);
            return 1;
        case ModelKind::Rbfn: return std::min(config_.grid.max_k, n_fold) * config_.grid.n_wsf;
        case ModelKind::Lssvm: return config_.grid.n_sigma * config_.grid.n_gamma;
    }
    return 0;
}

std::filesystem::path Experiment::report_dir(int id) const {
    return config_.out / source_.name / ("method-" + std::to_string(id)) / ("seed-" + std::to_string(config_.seed));
}

ModelDocument Experiment::document(const Prepared& p, const CvReport& r) const {
    ModelDocument d;
    d.preprocess = config_.preprocess.value_or("none");
    d.raw_labels = source_.data.labels();
    d.target = source_.target;
    d.columns = p.columns;
    d.pipeline = r.final_model;
    d.metadata = {{"dataset", source_.name},
                  {"method", p.info.id},
                  {"description", p.info.description()},
                  {"seed", config_.seed},
                  {"nmse_v", r.points[r.winner].mean_v}};
    return d;
}

ModelDocument Experiment::train_method(int id, CvReport* report) {
    Prepared p = prepare(id);
    note("method " + std::to_string(id) + " (" + p.info.description() + "): " + std::to_string(p.grid.size()) +
         " grid points x " + std::to_string(folds_) + " folds");
    CvReport r = cross_validate(p.train, p.spec, p.grid, cv_options(), var_y_all_);
    ModelDocument d = document(p, r);
    if (report) *report = std::move(r);
    return d;
}

MethodOutcome Experiment::run_method(int id) {
    const auto start = std::chrono::steady_clock::now();
    Prepared p = prepare(id);
    note("method " + std::to_string(id) + " (" + p.info.description() + "): " + std::to_string(p.grid.size()) +
         " grid points x " + std::to_string(folds_) + " folds");

    MethodOutcome out;
    out.info = p.info;
    out.columns = p.columns;
    std::optional<TestSetGuard> guard;
    if (test_.rows() > 0) guard.emplace(p.columns.empty() ? test_ : test_.select_columns(p.columns));
    out.cv = cross_validate(p.train, p.spec, p.grid, cv_options(), var_y_all_, guard ? &*guard : nullptr);
    out.test_reads = guard ? guard->reads() : 0;
    if (p.info.uses_mi) out.selection = *selection_;
    if (p.spec.projection) {
        out.n_inputs = p.spec.components > 0 ? p.spec.components : out.cv.winner_params.components;
    } else {
        out.n_inputs = p.train.cols();
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    out.report_dir = report_dir(id);
    std::filesystem::create_directories(out.report_dir);
    Json report;
    report["dataset"] = {{"name", source_.name},
                         {"target", source_.target},
                         {"rows", source_.data.rows()},
                         {"raw_variables", source_.data.cols()},
                         {"variables", train_.cols()},
                         {"train_rows", train_.rows()},
                         {"test_rows", test_.rows()}};
    report["config"] = to_json(config_);
    report["method"] = {{"id", id}, {"description", p.info.description()}, {"inputs", out.n_inputs}};
    if (p.info.uses_mi) {
        Json labels = Json::array();
        for (std::size_t c : p.columns) labels.push_back(train_.label(c));
        report["method"]["selected_columns"] = p.columns;
        report["method"]["selected_labels"] = labels;
    }
    if (p.info.components_from != 0) report["method"]["components_from_method"] = p.info.components_from;
    report["cv"] = to_json(out.cv);
    report["test_reads"] = out.test_reads;
    report["seconds"] = out.seconds;
    write_json(out.report_dir / "report.json", report);
    write_grid_csv(out.report_dir / "grid.csv", out.cv);
    save_model(out.report_dir / "model.json", document(p, out.cv));
    if (out.selection) {
        Json trace = to_json(*out.selection, train_.labels());
        trace["trace"] = to_json(out.selection->trace, train_.labels());
        write_json(out.report_dir / "trace.json", trace);
    }
    std::ostringstream msg;
    msg << "method " << id << " done in " << std::fixed << std::setprecision(1) << out.seconds << " s";
    if (out.cv.nmse_test) msg << ", NMSE_T = " << std::scientific << std::setprecision(3) << *out.cv.nmse_test;
    note(msg.str());
    return out;
}

std::string format_benchmark(const std::vector<BenchmarkRow>& rows) {
    std::vector<double> scores;
    for (const auto& r : rows)
        if (r.nmse_test) scores.push_back(*r.nmse_test);
    std::sort(scores.begin(), scores.end());
    const double bold_limit = scores.size() >= 2 ? scores[1] : scores.empty() ? -1.0 : scores[0];

    std::ostringstream out;
    out << "| Method | Reduction | Whitening | Inputs | Model | NMSE_T |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        out << "| (" << r.method << ") | " << r.reduction << " | " << r.whitening << " | " << r.n_inputs << " | "
            << r.model << " | ";
        if (r.nmse_test) {
            std::ostringstream v;
            v << std::scientific << std::setprecision(2) << *r.nmse_test;
            if (*r.nmse_test <= bold_limit) out << "**" << v.str() << "**";
            else out << v.str();
        } else {
            out << "failed: " << r.error;
        }
        out << " |\n";
    }
    return out.str();
}

}  // namespace mirsel
