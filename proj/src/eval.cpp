#include "mirsel/eval.hpp"

#include "mirsel/error.hpp"
#include "mirsel/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace mirsel {

double nmse(const Eigen::Ref<const Eigen::VectorXd>& predictions, const Eigen::Ref<const Eigen::VectorXd>& targets,
            double var_y_all) {
    if (predictions.size() != targets.size()) throw ConfigError("predictions and targets differ in length");
    if (predictions.size() == 0) throw ConfigError("NMSE of an empty set");
    if (!(var_y_all > 0.0) || !std::isfinite(var_y_all)) throw ConfigError("target variance must be positive");
    return (predictions - targets).squaredNorm() / static_cast<double>(targets.size()) / var_y_all;
}

namespace {

// Uniform integer in [0, bound) by rejection, so the shuffle does not depend
// on the standard library's distribution implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    for (;;) {
        const std::uint64_t r = rng();
        if (r < limit) return r % bound;
    }
}

}  // namespace

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t l, std::uint64_t seed) {
    if (l < 2 || l > n) {
        throw ConfigError("fold count must satisfy 2 <= l <= n (l = " + std::to_string(l) + ", n = " + std::to_string(n) +
                          ")");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_below(rng, i + 1)]);
    std::vector<std::vector<std::size_t>> folds(l);
    std::size_t at = 0;
    for (std::size_t f = 0; f < l; ++f) {
        const std::size_t size = n / l + (f < n % l ? 1 : 0);
        folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                        order.begin() + static_cast<std::ptrdiff_t>(at + size));
        std::sort(folds[f].begin(), folds[f].end());
        at += size;
    }
    return folds;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw ConfigError("percentile of an empty set");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("percentile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return percentile(std::move(values), 0.5); }

std::vector<std::size_t> trim_outliers(const std::vector<double>& errors) {
    if (errors.empty()) throw ConfigError("cannot trim an empty error list");
    const double med = median(errors);
    std::vector<double> dev(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) dev[i] = std::abs(errors[i] - med);
    const double threshold = percentile(dev, 0.99);
    std::vector<std::size_t> kept;
    kept.reserve(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!(dev[i] > threshold)) kept.push_back(i);
    return kept;
}

// ---------------------------------------------------------------------------

std::size_t MetaGrid::size() const {
    std::size_t n = 1;
    for (const auto& v : values) n *= v.size();
    return n;
}

void MetaGrid::validate() const {
    if (axes.size() != values.size()) throw ConfigError("grid axes and value lists differ in number");
    for (std::size_t a = 0; a < axes.size(); ++a) {
        if (values[a].empty()) throw ConfigError("grid axis '" + axes[a] + "' has no values");
        static const char* known[] = {"components", "k", "wsf", "sigma", "gamma"};
        if (std::find(std::begin(known), std::end(known), axes[a]) == std::end(known))
            throw ConfigError("unknown grid axis '" + axes[a] + "'");
    }
}

double MetaGrid::value(std::size_t point, const std::string& axis) const {
    if (point >= size()) throw ConfigError("grid point out of range");
    std::size_t rest = point;
    double found = std::numeric_limits<double>::quiet_NaN();
    bool present = false;
    for (std::size_t a = axes.size(); a-- > 0;) {
        const std::size_t idx = rest % values[a].size();
        rest /= values[a].size();
        if (axes[a] == axis) {
            found = values[a][idx];
            present = true;
        }
    }
    if (!present) throw ConfigError("grid has no axis '" + axis + "'");
    return found;
}

ModelParams MetaGrid::params(std::size_t point) const {
    ModelParams p;
    for (const auto& axis : axes) {
        const double v = value(point, axis);
        if (axis == "components") p.components = static_cast<std::size_t>(v);
        else if (axis == "k") p.k = static_cast<std::size_t>(v);
        else if (axis == "wsf") p.wsf = v;
        else if (axis == "sigma") p.sigma = v;
        else if (axis == "gamma") p.gamma = v;
    }
    return p;
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi >= lo) || n == 0) throw ConfigError("log_space needs 0 < lo <= hi and n >= 1");
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

double median_pairwise_distance(const Eigen::MatrixXd& x) {
    if (x.rows() < 2) throw ConfigError("median pairwise distance needs at least two rows");
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(x.rows() * (x.rows() - 1) / 2));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = i + 1; j < x.rows(); ++j) d.push_back((x.row(i) - x.row(j)).norm());
    return median(std::move(d));
}

namespace {

std::vector<double> integer_axis(std::size_t lo, std::size_t hi) {
    std::vector<double> v;
    for (std::size_t i = lo; i <= hi; ++i) v.push_back(static_cast<double>(i));
    return v;
}

std::size_t smallest_fold_train(std::size_t n, std::size_t l) {
    if (l < 2 || l > n) throw ConfigError("fold count must satisfy 2 <= l <= n");
    return n - (n + l - 1) / l;
}

}  // namespace

MetaGrid default_grid(const Dataset& train, const PipelineSpec& spec, std::size_t l, const GridOptions& options) {
    const std::size_t n_fold = smallest_fold_train(train.rows(), l);
    MetaGrid g;
    switch (spec.model) {
        case ModelKind::Linear:
            if (spec.projection && spec.components == 0) {
                const std::size_t top = std::min({max_components(n_fold, train.cols()), options.max_components});
                if (top == 0) throw ConfigError("no component count fits the fold size");
                g.axes = {"components"};
                g.values = {integer_axis(1, top)};
            }
            break;
        case ModelKind::Rbfn:
            g.axes = {"k", "wsf"};
            g.values = {integer_axis(1, std::min(options.max_k, n_fold)), log_space(0.1, 10.0, options.n_wsf)};
            break;
        case ModelKind::Lssvm: {
            ModelParams p;
            p.components = spec.components;
            const FittedPipeline f = fit_features(train, spec, p);
            const double dbar = median_pairwise_distance(f.features(train.x()));
            if (!(dbar > 0.0)) throw DataError("training inputs are all identical; no kernel width scale");
            g.axes = {"sigma", "gamma"};
            g.values = {log_space(1e-2 * dbar, 1e2 * dbar, options.n_sigma), log_space(1e-3, 1e6, options.n_gamma)};
            break;
        }
    }
    g.validate();
    return g;
}

const Dataset& TestSetGuard::read() {
    if (reads_ > 0) throw std::logic_error("the test set has already been read");
    ++reads_;
    return test_;
}

// ---------------------------------------------------------------------------

namespace {

struct Fold {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> val_rows;
    Dataset train;
    Dataset val;
    // Model inputs after the fold's own projection/whitening (RBFN, LS-SVM).
    Eigen::MatrixXd f_train;
    Eigen::MatrixXd f_val;
};

struct Scorer {
    const CvOptions& options;
    double var_y_all;

    FoldScore operator()(const Eigen::VectorXd& pred_l, const Fold& fold, const Eigen::VectorXd& pred_v) const {
        if (!pred_l.allFinite() || !pred_v.allFinite()) throw NumericalError("non-finite predictions");
        FoldScore s;
        s.nmse_l = score(pred_l, fold.train.y(), options.trim_training, nullptr, fold.train_rows);
        s.nmse_v = score(pred_v, fold.val.y(), options.trim_validation, &s.trimmed, fold.val_rows);
        return s;
    }

    double score(const Eigen::VectorXd& pred, const Eigen::VectorXd& y, bool trim, std::vector<std::size_t>* dropped,
                 const std::vector<std::size_t>& rows) const {
        if (!trim) return nmse(pred, y, var_y_all);
        const Eigen::VectorXd e = pred - y;
        const std::vector<std::size_t> kept = trim_outliers(std::vector<double>(e.data(), e.data() + e.size()));
        if (dropped) {
            std::size_t k = 0;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (k < kept.size() && kept[k] == i) ++k;
                else dropped->push_back(rows[i]);
            }
        }
        Eigen::VectorXd ek(static_cast<Eigen::Index>(kept.size()));
        for (std::size_t i = 0; i < kept.size(); ++i) ek(static_cast<Eigen::Index>(i)) = e(static_cast<Eigen::Index>(kept[i]));
        return ek.squaredNorm() / static_cast<double>(ek.size()) / var_y_all;
    }
};

// Grid points that share the expensive part of a fit: one point for linear
// pipelines, one K for RBFN, one sigma for LS-SVM.
std::size_t group_size(const PipelineSpec& spec, const MetaGrid& grid) {
    return spec.model == ModelKind::Linear ? 1 : grid.values[1].size();
}

void check_grid_shape(const PipelineSpec& spec, const MetaGrid& grid) {
    grid.validate();
    auto expect = [&](std::vector<std::string> axes) {
        if (grid.axes != axes) throw ConfigError("grid axes do not match the " + to_string(spec.model) + " model");
    };
    switch (spec.model) {
        case ModelKind::Linear:
            if (spec.projection && spec.components == 0) expect({"components"});
            else expect({});
            break;
        case ModelKind::Rbfn: expect({"k", "wsf"}); break;
        case ModelKind::Lssvm: expect({"sigma", "gamma"}); break;
    }
    if (spec.model != ModelKind::Linear && spec.projection && spec.components == 0)
        throw ConfigError("nonlinear models need a fixed projection component count");
}

void evaluate_group(const PipelineSpec& spec, const MetaGrid& grid, const Scorer& scorer, const Fold& fold,
                    std::size_t first, std::size_t count, std::vector<PointResult>& out, std::size_t f) {
    switch (spec.model) {
        case ModelKind::Linear: {
            const FittedPipeline p = fit_pipeline(fold.train, spec, grid.params(first));
            out[first].folds[f] = scorer(p.predict(fold.train.x()), fold, p.predict(fold.val.x()));
            return;
        }
        case ModelKind::Rbfn: {
            const ModelParams head = grid.params(first);
            if (head.k == 0 || head.k > fold.train.rows()) throw ConfigError("K exceeds the fold's training size");
            const RbfnStructure st = rbfn_structure(fold.f_train, head.k, spec.model_seed);
            for (std::size_t i = first; i < first + count; ++i) {
                const RbfnModel m = fit_rbfn(fold.f_train, fold.train.y(), st, grid.params(i).wsf);
                out[i].folds[f] = scorer(m.predict(fold.f_train), fold, m.predict(fold.f_val));
            }
            return;
        }
        case ModelKind::Lssvm: {
            const double sigma = grid.params(first).sigma;
            const LssvmPath path(fold.f_train, fold.train.y(), sigma);
            const Eigen::MatrixXd kv = kernel_matrix(fold.f_val, fold.f_train, sigma);
            for (std::size_t i = first; i < first + count; ++i) {
                auto [alpha, b] = path.solve(grid.params(i).gamma);
                const Eigen::VectorXd pl = (path.kernel() * alpha).array() + b;
                const Eigen::VectorXd pv = (kv * alpha).array() + b;
                out[i].folds[f] = scorer(pl, fold, pv);
            }
            return;
        }
    }
}

}  // namespace

CvReport cross_validate(const Dataset& train, const PipelineSpec& spec, const MetaGrid& grid,
                        const CvOptions& options, double var_y_all, TestSetGuard* test) {
    check_grid_shape(spec, grid);
    if (!(var_y_all > 0.0)) throw ConfigError("target variance must be positive");

    CvReport report;
    report.spec = spec;
    report.grid = grid;
    report.options = options;
    report.var_y_all = var_y_all;
    report.folds = kfold_split(train.rows(), options.folds, options.seed);

    const std::size_t l = report.folds.size();
    std::vector<Fold> folds(l);
    std::vector<std::string> fold_errors(l);
    parallel_for(l, options.workers, [&](std::size_t f) {
        Fold& fold = folds[f];
        fold.val_rows = report.folds[f];
        for (std::size_t o = 0; o < l; ++o)
            if (o != f) fold.train_rows.insert(fold.train_rows.end(), report.folds[o].begin(), report.folds[o].end());
        std::sort(fold.train_rows.begin(), fold.train_rows.end());
        fold.train = train.select_rows(fold.train_rows);
        fold.val = train.select_rows(fold.val_rows);
        if (spec.model != ModelKind::Linear) {
            try {
                ModelParams p;
                p.components = spec.components;
                const FittedPipeline feat = fit_features(fold.train, spec, p);
                fold.f_train = feat.features(fold.train.x());
                fold.f_val = feat.features(fold.val.x());
            } catch (const std::exception& e) {
                fold_errors[f] = e.what();
            }
        }
    });

    const std::size_t n_points = grid.size();
    const std::size_t per_group = group_size(spec, grid);
    const std::size_t n_groups = n_points / per_group;
    report.points.assign(n_points, PointResult{std::vector<FoldScore>(l), 0.0, 0.0, {}});
    std::vector<std::string> errors(n_points * l);
    const Scorer scorer{options, var_y_all};

    parallel_for(n_groups * l, options.workers, [&](std::size_t task) {
        const std::size_t f = task % l;
        const std::size_t first = (task / l) * per_group;
        auto fail = [&](const std::string& what) {
            for (std::size_t i = first; i < first + per_group; ++i) errors[i * l + f] = what;
        };
        if (!fold_errors[f].empty()) return fail(fold_errors[f]);
        try {
            evaluate_group(spec, grid, scorer, folds[f], first, per_group, report.points, f);
        } catch (const std::exception& e) {
            fail(e.what());
        }
    });

    for (std::size_t i = 0; i < n_points; ++i) {
        PointResult& pr = report.points[i];
        for (std::size_t f = 0; f < l; ++f) {
            if (!errors[i * l + f].empty() && pr.error.empty())
                pr.error = "fold " + std::to_string(f) + ": " + errors[i * l + f];
        }
        if (!pr.ok()) {
            pr.mean_l = pr.mean_v = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        for (const auto& fs : pr.folds) {
            pr.mean_l += fs.nmse_l;
            pr.mean_v += fs.nmse_v;
        }
        pr.mean_l /= static_cast<double>(l);
        pr.mean_v /= static_cast<double>(l);
    }

    std::vector<std::size_t> ranked;
    for (std::size_t i = 0; i < n_points; ++i)
        if (report.points[i].ok()) ranked.push_back(i);
    if (ranked.empty()) {
        throw NumericalError("every grid point failed to fit; first error: " + report.points.front().error);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
        return report.points[a].mean_v < report.points[b].mean_v;
    });

    std::string last_error;
    bool fitted = false;
    for (std::size_t candidate : ranked) {
        try {
            report.final_model = fit_pipeline(train, spec, grid.params(candidate));
            report.winner = candidate;
            fitted = true;
            break;
        } catch (const NumericalError& e) {
            report.refit_failures.push_back(candidate);
            last_error = e.what();
        }
    }
    if (!fitted) throw NumericalError("no grid point could be refitted on the full training set: " + last_error);
    report.winner_params = grid.params(report.winner);
    report.nmse_train = nmse(report.final_model.predict(train.x()), train.y(), var_y_all);
    if (const auto* m = std::get_if<LssvmModel>(&report.final_model.model))
        report.kkt_residual = lssvm_kkt_residual(*m, train.y());

    if (test) {
        const Dataset& t = test->read();
        const Eigen::VectorXd pred = report.final_model.predict(t.x());
        if (options.trim_test) {
            const Eigen::VectorXd e = pred - t.y();
            const auto kept = trim_outliers(std::vector<double>(e.data(), e.data() + e.size()));
            report.test_trimmed = t.rows() - kept.size();
            double acc = 0.0;
            for (std::size_t i : kept) acc += e(static_cast<Eigen::Index>(i)) * e(static_cast<Eigen::Index>(i));
            report.nmse_test = acc / static_cast<double>(kept.size()) / var_y_all;
        } else {
            report.nmse_test = nmse(pred, t.y(), var_y_all);
        }
    }
    return report;
}

}  // namespace mirsel
