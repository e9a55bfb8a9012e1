// mirsel: variable selection by mutual information and the spectral
// regression benchmark built on it.

#include "mirsel/error.hpp"
#include "mirsel/experiment.hpp"
#include "mirsel/fetch.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>

namespace {

using namespace mirsel;

enum ExitCode { kOk = 0, kFailure = 1, kConfigFailure = 2, kDataFailure = 3, kNumericalFailure = 4 };

struct Flags {
    std::string config;
    std::string dataset;
    std::string data_dir;
    std::string preprocess;
    std::string out;
    int method = 0;
    std::size_t k = 0;
    std::size_t p = 0;
    std::size_t folds = 0;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    std::size_t components = 0;
    bool dry_run = false;
    bool quiet = false;
};

struct Registered {
    CLI::Option* dataset = nullptr;
    CLI::Option* data_dir = nullptr;
    CLI::Option* preprocess = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* method = nullptr;
    CLI::Option* k = nullptr;
    CLI::Option* p = nullptr;
    CLI::Option* folds = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* workers = nullptr;
    CLI::Option* components = nullptr;
};

Registered add_common(CLI::App* cmd, Flags& f, bool with_method) {
    Registered r;
    cmd->add_option("--config", f.config, "JSON configuration file; flags override its fields")->check(CLI::ExistingFile);
    r.dataset = cmd->add_option("--dataset", f.dataset, "dataset name (manifest in the data directory) or manifest path");
    r.data_dir = cmd->add_option("--data-dir", f.data_dir, "dataset directory (default $MIRSEL_DATA_DIR or ./data)");
    r.preprocess = cmd->add_option("--preprocess", f.preprocess, "none | spectrum-normalize (default: from manifest)");
    r.out = cmd->add_option("--out", f.out, "report root directory (default ./reports)");
    r.k = cmd->add_option("--k", f.k, "neighbours for the MI estimator (default 6)");
    r.p = cmd->add_option("--p", f.p, "candidate pool size for the exhaustive search (default 16, at most 20)");
    r.folds = cmd->add_option("--folds", f.folds, "cross-validation folds (default: from manifest)");
    r.seed = cmd->add_option("--seed", f.seed, "seed for folds, k-means and tie jitter (default 0)");
    r.workers = cmd->add_option("--workers", f.workers, "worker threads, 0 = all cores (default 0)");
    if (with_method) {
        r.method = cmd->add_option("--method", f.method, "method number 1..13")->required();
        r.components = cmd->add_option("--components", f.components,
                                       "component count for methods 3-10 (default: chosen by method 1 or 2)");
    }
    cmd->add_flag("--quiet", f.quiet, "no progress messages");
    return r;
}

ExperimentConfig make_config(const Flags& f, const Registered& r) {
    ExperimentConfig c;
    if (!f.config.empty()) apply_json(read_json(f.config), c);
    auto given = [](CLI::Option* o) { return o != nullptr && o->count() > 0; };
    if (given(r.dataset)) c.dataset = f.dataset;
    if (given(r.data_dir)) c.data_dir = f.data_dir;
    if (given(r.preprocess)) c.preprocess = f.preprocess;
    if (given(r.out)) c.out = f.out;
    if (given(r.method)) c.method = f.method;
    if (given(r.k)) c.k = f.k;
    if (given(r.p)) c.p = f.p;
    if (given(r.folds)) c.folds = f.folds;
    if (given(r.seed)) c.seed = f.seed;
    if (given(r.workers)) c.workers = f.workers;
    if (given(r.components)) c.components = f.components;
    c.validate();
    return c;
}

ProgressFn progress(const Flags& f) {
    if (f.quiet) return {};
    return [](const std::string& msg) { std::cerr << "[mirsel] " << msg << std::endl; };
}

std::string sci(double v, int digits = 3) {
    std::ostringstream s;
    s << std::scientific << std::setprecision(digits) << v;
    return s.str();
}

int cmd_estimate(const Flags& f, const Registered& r) {
    Experiment ex(make_config(f, r), progress(f));
    const auto ranking = ex.estimate();
    const auto dir = ex.config().out / ex.source().name;
    std::filesystem::create_directories(dir);
    const auto path = dir / ("mi-k" + std::to_string(ex.config().k) + ".csv");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "rank,column,label,mi\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        out << i + 1 << ',' << ranking[i].column << ',' << ex.train().label(ranking[i].column) << ',' << ranking[i].mi
            << '\n';
    }
    if (!f.quiet) std::cerr << "[mirsel] wrote " << ranking.size() << " estimates to " << path.string() << std::endl;
    return kOk;
}

int cmd_select(const Flags& f, const Registered& r) {
    Experiment ex(make_config(f, r), progress(f));
    const SelectionResult& s = ex.selection();
    const auto dir = ex.config().out / ex.source().name / ("selection-seed" + std::to_string(ex.config().seed));
    std::filesystem::create_directories(dir);
    const auto& labels = ex.train().labels();
    Json j = to_json(s, labels);
    j["config"] = to_json(ex.config());
    write_json(dir / "selection.json", j);
    write_json(dir / "trace.json", to_json(s.trace, labels));
    std::cout << "B (" << s.b.size() << " variables, MI " << std::setprecision(4) << s.b_mi << "):";
    for (std::size_t c : s.b.indices) std::cout << ' ' << ex.train().label(c);
    std::cout << "\nC (" << s.c.size() << " candidates, " << s.subsets_evaluated << " subsets evaluated)\n";
    std::cout << "selected (" << s.selected.size() << " variables, MI " << s.selected_mi << "):";
    for (std::size_t c : s.selected.indices) std::cout << ' ' << ex.train().label(c);
    std::cout << '\n';
    return kOk;
}

int cmd_train(const Flags& f, const Registered& r) {
    ExperimentConfig c = make_config(f, r);
    Experiment ex(c, progress(f));
    CvReport report;
    const ModelDocument doc = ex.train_method(c.method, &report);
    const auto dir = ex.report_dir(c.method);
    std::filesystem::create_directories(dir);
    save_model(dir / "model.json", doc);
    write_grid_csv(dir / "grid.csv", report);
    Json j;
    j["config"] = to_json(ex.config());
    j["cv"] = to_json(report);
    write_json(dir / "train.json", j);
    std::cout << "method " << c.method << ": NMSE_V " << sci(report.points[report.winner].mean_v) << ", model "
              << (dir / "model.json").string() << '\n';
    return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& input, const std::string& out_path) {
    const ModelDocument doc = load_model(model_path);
    CsvTable table = read_csv_table(input, HeaderMode::Auto);
    Eigen::MatrixXd x = table.values;
    std::optional<Eigen::VectorXd> target;
    if (!doc.target.empty() && !table.names.empty()) {
        auto it = std::find(table.names.begin(), table.names.end(), doc.target);
        if (it != table.names.end()) {
            const auto col = static_cast<Eigen::Index>(it - table.names.begin());
            target = x.col(col);
            Eigen::MatrixXd rest(x.rows(), x.cols() - 1);
            rest << x.leftCols(col), x.rightCols(x.cols() - col - 1);
            x = std::move(rest);
        }
    }
    const Eigen::VectorXd pred = doc.predict(x);
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path);
    out << "prediction" << (target ? "," + doc.target : "") << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        out << pred(i);
        if (target) out << ',' << (*target)(i);
        out << '\n';
    }
    if (target) {
        std::cerr << "[mirsel] mean squared error on " << pred.size() << " rows: " << sci((pred - *target).squaredNorm() / pred.size())
                  << std::endl;
    }
    return kOk;
}

void print_plan(Experiment& ex, const std::vector<int>& methods) {
    const auto& c = ex.config();
    std::cout << "dataset " << ex.source().name << ": " << ex.train().rows() << " training rows, " << ex.test_rows()
              << " test rows, " << ex.train().cols() << " variables after preprocessing ("
              << c.preprocess.value_or("none") << "), " << ex.folds() << " folds\n";
    bool mi = false;
    for (int id : methods) {
        const MethodInfo info = method_info(id);
        mi |= info.uses_mi;
        std::cout << "  method " << std::setw(2) << id << "  " << std::left << std::setw(28) << info.description()
                  << std::right << std::setw(7) << ex.planned_grid_size(id) << " grid points x " << ex.folds()
                  << " folds\n";
    }
    if (mi) {
        const double subsets = std::ldexp(1.0, static_cast<int>(c.p));
        std::cout << "  exhaustive search: P = " << c.p << ", 2^" << c.p << " = " << std::fixed << std::setprecision(0)
                  << subsets << " subsets (" << subsets - 1 << " non-empty) of " << ex.train().rows()
                  << " samples, k = " << c.k << '\n';
    }
}

int cmd_run_method(const Flags& f, const Registered& r) {
    ExperimentConfig c = make_config(f, r);
    Experiment ex(c, progress(f));
    if (f.dry_run) {
        print_plan(ex, {c.method});
        return kOk;
    }
    const MethodOutcome o = ex.run_method(c.method);
    std::cout << "method " << c.method << " (" << o.info.description() << "), " << o.n_inputs << " inputs: NMSE_V "
              << sci(o.cv.points[o.cv.winner].mean_v);
    if (o.cv.nmse_test) std::cout << ", NMSE_T " << sci(*o.cv.nmse_test);
    std::cout << "\nreport: " << o.report_dir.string() << '\n';
    return kOk;
}

int cmd_reproduce(const Flags& f, const Registered& r, std::vector<int> methods) {
    ExperimentConfig c = make_config(f, r);
    if (methods.empty())
        for (int id = 1; id <= kMethodCount; ++id) methods.push_back(id);
    for (int id : methods) method_info(id);
    Experiment ex(c, progress(f));
    if (f.dry_run) {
        print_plan(ex, methods);
        return kOk;
    }
    std::vector<BenchmarkRow> rows;
    Json results = Json::array();
    bool numerical = false;
    for (int id : methods) {
        const MethodInfo info = method_info(id);
        BenchmarkRow row;
        row.method = id;
        row.reduction = info.reduction;
        row.whitening = info.projection ? (info.whiten ? "yes" : "no") : "-";
        const char* names[] = {"linear", "RBFN", "LS-SVM"};
        row.model = names[static_cast<int>(info.model)];
        Json entry{{"method", id}, {"description", info.description()}};
        try {
            const MethodOutcome o = ex.run_method(id);
            row.n_inputs = o.n_inputs;
            row.nmse_test = o.cv.nmse_test;
            entry["inputs"] = o.n_inputs;
            entry["nmse_v"] = o.cv.points[o.cv.winner].mean_v;
            entry["nmse_test"] = o.cv.nmse_test ? Json(*o.cv.nmse_test) : Json(nullptr);
            entry["report"] = o.report_dir.string();
            entry["seconds"] = o.seconds;
        } catch (const NumericalError& e) {
            numerical = true;
            row.error = e.what();
            entry["error"] = e.what();
            std::cerr << "[mirsel] method " << id << " failed: " << e.what() << std::endl;
        }
        rows.push_back(row);
        results.push_back(entry);
    }
    const std::string table = format_benchmark(rows);
    const auto dir = ex.config().out / ex.source().name;
    std::filesystem::create_directories(dir);
    const std::string stem = "reproduce-seed" + std::to_string(ex.config().seed);
    write_json(dir / (stem + ".json"), Json{{"config", to_json(ex.config())}, {"methods", results}});
    std::ofstream(dir / (stem + ".md")) << table;
    std::cout << table;
    return numerical ? kNumericalFailure : kOk;
}

int cmd_fetch(const std::string& out_dir) {
    httplib::Client cli(kTecatorHost);
    cli.set_connection_timeout(20);
    cli.set_read_timeout(60);
    auto res = cli.Get(kTecatorPath);
    if (!res || res->status != 200) {
        const std::string why = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
        throw DataError(std::string("could not download http://") + kTecatorHost + kTecatorPath + " (" + why +
                        "); tools/fetch_tecator.py can build the same files from the rdatasets package");
    }
    write_tecator(out_dir, parse_tecator_archive(res->body));
    std::cerr << "[mirsel] wrote tecator.csv, tecator_split.json and tecator.json to " << out_dir << std::endl;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variable selection by mutual information for spectral regression"};
    app.require_subcommand(1);

    Flags f;
    auto* estimate = app.add_subcommand("estimate", "individual MI of every variable with the target");
    Registered r_estimate = add_common(estimate, f, false);

    auto* select = app.add_subcommand("select", "forward/backward + exhaustive MI variable selection");
    Registered r_select = add_common(select, f, false);

    auto* train = app.add_subcommand("train", "cross-validate one method on the training rows and save the model");
    Registered r_train = add_common(train, f, true);

    std::string model_path, input_path, predictions_path;
    auto* predict = app.add_subcommand("predict", "apply a saved model to a CSV of raw inputs");
    predict->add_option("--model", model_path, "model.json written by train or run-method")->required()->check(CLI::ExistingFile);
    predict->add_option("--input", input_path, "CSV with the raw input variables")->required()->check(CLI::ExistingFile);
    predict->add_option("--out", predictions_path, "predictions CSV to write")->required();

    auto* run = app.add_subcommand("run-method", "full pipeline for one method, including the test evaluation");
    Registered r_run = add_common(run, f, true);
    run->add_flag("--dry-run", f.dry_run, "print the planned grid and subset counts only");

    std::vector<int> methods;
    auto* reproduce = app.add_subcommand("reproduce", "run methods 1-13 and print the benchmark table");
    Registered r_reproduce = add_common(reproduce, f, false);
    reproduce->add_option("--methods", methods, "subset of methods to run (default: all)")->delimiter(',');
    reproduce->add_option("--components", f.components, "component count for methods 3-10");
    reproduce->add_flag("--dry-run", f.dry_run, "print the planned grid and subset counts only");
    r_reproduce.components = reproduce->get_option("--components");

    std::string fetch_dir = default_data_dir().string();
    auto* fetch = app.add_subcommand("fetch-data", "download the Tecator dataset from StatLib");
    fetch->add_option("--out", fetch_dir, "directory for the dataset files (default $MIRSEL_DATA_DIR or ./data)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigFailure;
    }

    try {
        if (*estimate) return cmd_estimate(f, r_estimate);
        if (*select) return cmd_select(f, r_select);
        if (*train) return cmd_train(f, r_train);
        if (*predict) return cmd_predict(model_path, input_path, predictions_path);
        if (*run) return cmd_run_method(f, r_run);
        if (*reproduce) return cmd_reproduce(f, r_reproduce, methods);
        if (*fetch) return cmd_fetch(fetch_dir);
    } catch (const ConfigError& e) {
        std::cerr << "mirsel: configuration error: " << e.what() << std::endl;
        return kConfigFailure;
    } catch (const DataError& e) {
        std::cerr << "mirsel: data error: " << e.what() << std::endl;
        return kDataFailure;
    } catch (const NumericalError& e) {
        std::cerr << "mirsel: numerical error: " << e.what() << std::endl;
        return kNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "mirsel: " << e.what() << std::endl;
        return kFailure;
    }
    return kFailure;
}
