#include "mirsel/baselines.hpp"

#include "mirsel/error.hpp"

#include <algorithm>
#include <cmath>

namespace mirsel {

namespace {

void check_request(const Dataset& train, std::size_t n_components) {
    const std::size_t limit = max_components(train.rows(), train.cols());
    if (n_components == 0 || n_components > limit) {
        throw ConfigError("requested " + std::to_string(n_components) + " components, allowed range is 1.." +
                          std::to_string(limit));
    }
}

Eigen::MatrixXd prepare(const Dataset& train, const ProjectionOptions& options, Projection& p) {
    p.x_mean = train.x().colwise().mean().transpose();
    p.x_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(train.cols()));
    Eigen::MatrixXd xc = train.x().rowwise() - p.x_mean.transpose();
    if (options.scale_columns) {
        for (Eigen::Index j = 0; j < xc.cols(); ++j) {
            const double sd = std::sqrt(xc.col(j).squaredNorm() / static_cast<double>(xc.rows() - 1));
            if (sd > 0.0) p.x_scale(j) = sd;
        }
        xc = xc.array().rowwise() / p.x_scale.transpose().array();
    }
    return xc;
}

}  // namespace

std::string to_string(ProjectionKind kind) { return kind == ProjectionKind::PCA ? "PCA" : "PLS"; }

std::size_t max_components(std::size_t n_rows, std::size_t n_cols) {
    return n_rows == 0 ? 0 : std::min(n_rows - 1, n_cols);
}

Projection Projection::truncated(std::size_t n) const {
    if (n == 0 || n > n_components()) {
        throw ConfigError("cannot truncate a " + std::to_string(n_components()) + "-component projection to " +
                          std::to_string(n));
    }
    Projection out = *this;
    out.loadings = loadings.leftCols(static_cast<Eigen::Index>(n));
    if (explained_variance.size() > 0) out.explained_variance = explained_variance.head(static_cast<Eigen::Index>(n));
    return out;
}

Projection fit_pca(const Dataset& train, std::size_t n_components, const ProjectionOptions& options) {
    check_request(train, n_components);
    Projection p;
    p.kind = ProjectionKind::PCA;
    const Eigen::MatrixXd xc = prepare(train, options, p);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinV);
    const auto n = static_cast<Eigen::Index>(n_components);
    p.loadings = svd.matrixV().leftCols(n);
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index at = 0;
        p.loadings.col(c).cwiseAbs().maxCoeff(&at);
        if (p.loadings(at, c) < 0.0) p.loadings.col(c) *= -1.0;
    }
    p.explained_variance = svd.singularValues().head(n).array().square() / static_cast<double>(xc.rows() - 1);
    return p;
}

Projection fit_pls(const Dataset& train, std::size_t n_components, const ProjectionOptions& options) {
    check_request(train, n_components);
    Projection p;
    p.kind = ProjectionKind::PLS;
    Eigen::MatrixXd x = prepare(train, options, p);
    p.y_mean = train.y().mean();
    Eigen::VectorXd y = train.y().array() - p.y_mean;

    const Eigen::Index m = x.cols();
    Eigen::MatrixXd w(m, static_cast<Eigen::Index>(n_components));
    Eigen::MatrixXd loads(m, static_cast<Eigen::Index>(n_components));
    Eigen::Index found = 0;
    double first_norm = 0.0;
    for (; found < static_cast<Eigen::Index>(n_components); ++found) {
        Eigen::VectorXd wa = x.transpose() * y;
        const double norm = wa.norm();
        if (found == 0) first_norm = norm;
        if (!(norm > 1e-12 * first_norm) || norm == 0.0) break;
        wa /= norm;
        const Eigen::VectorXd t = x * wa;
        const double tt = t.squaredNorm();
        if (!(tt > 0.0)) break;
        const Eigen::VectorXd pa = x.transpose() * t / tt;
        const double q = y.dot(t) / tt;
        x -= t * pa.transpose();
        y -= q * t;
        w.col(found) = wa;
        loads.col(found) = pa;
    }
    if (found == 0) throw NumericalError("PLS: inputs carry no covariance with the target");
    w.conservativeResize(Eigen::NoChange, found);
    loads.conservativeResize(Eigen::NoChange, found);
    // P'W is upper triangular, so leading columns of R are the R of fewer components.
    const Eigen::MatrixXd ptw = loads.transpose() * w;
    p.loadings = w * ptw.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(found, found));
    return p;
}

Eigen::MatrixXd transform(const Projection& p, const Eigen::MatrixXd& x) {
    if (static_cast<std::size_t>(x.cols()) != p.input_dim()) {
        throw ConfigError("projection expects " + std::to_string(p.input_dim()) + " variables, got " +
                          std::to_string(x.cols()));
    }
    const Eigen::MatrixXd xc = (x.rowwise() - p.x_mean.transpose()).array().rowwise() / p.x_scale.transpose().array();
    return xc * p.loadings;
}

Dataset transform(const Projection& p, const Dataset& d) {
    std::vector<std::string> labels;
    const std::string prefix = p.kind == ProjectionKind::PCA ? "pc" : "pls";
    for (std::size_t c = 0; c < p.n_components(); ++c) labels.push_back(prefix + std::to_string(c + 1));
    return d.with_x(transform(p, d.x()), std::move(labels));
}

}  // namespace mirsel
