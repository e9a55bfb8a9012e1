#include "mirsel/models.hpp"

#include "mirsel/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace mirsel {

namespace {

void check_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("kernel width must be positive");
}

void check_dim(Eigen::Index got, Eigen::Index expected) {
    if (got != expected) {
        throw ConfigError("input has " + std::to_string(got) + " variables, model expects " + std::to_string(expected));
    }
}

void check_xy(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw ConfigError("input rows and targets differ in length");
    if (x.rows() == 0) throw ConfigError("no training samples");
}

// Least squares with intercept: minimum-norm slopes on centered data.
std::pair<Eigen::VectorXd, double> centered_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
    const Eigen::RowVectorXd a_mean = a.colwise().mean();
    const double y_mean = y.mean();
    const Eigen::MatrixXd ac = a.rowwise() - a_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;
    Eigen::VectorXd coef = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(ac).solve(yc);
    return {coef, y_mean - a_mean.dot(coef)};
}

}  // namespace

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& c,
                  double sigma) {
    check_sigma(sigma);
    check_dim(x.size(), c.size());
    const double r = (x - c).norm() / (std::sqrt(2.0) * sigma);
    return std::exp(-r * r);
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    check_dim(a.cols(), b.cols());
    Eigen::MatrixXd d(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    return d;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double sigma) {
    check_sigma(sigma);
    return (-squared_distances(a, b).array() / (2.0 * sigma * sigma)).exp().matrix();
}

// ---------------------------------------------------------------------------

KMeansResult kmeans(const Eigen::MatrixXd& x, std::size_t k, std::uint64_t seed, std::size_t max_iterations) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (k == 0) throw ConfigError("k-means needs at least one centroid");
    if (k > n) throw ConfigError("k-means: " + std::to_string(k) + " centroids for " + std::to_string(n) + " samples");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    KMeansResult res;
    res.centroids.resize(static_cast<Eigen::Index>(k), x.cols());
    for (std::size_t c = 0; c < k; ++c) res.centroids.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(order[c]));
    res.assignment.assign(n, k);

    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        res.iterations = iter + 1;
        bool changed = false;
        std::vector<double> own_dist(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = (x.row(static_cast<Eigen::Index>(i)) - res.centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            own_dist[i] = best_d;
            if (res.assignment[i] != best) {
                res.assignment[i] = best;
                changed = true;
            }
        }
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) ++counts[res.assignment[i]];
        bool reseeded = false;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            // Move the farthest point (from its own centroid) into the empty cluster.
            std::size_t far = 0;
            for (std::size_t i = 1; i < n; ++i)
                if (own_dist[i] > own_dist[far] && counts[res.assignment[i]] > 1) far = i;
            if (counts[res.assignment[far]] <= 1) continue;  // every point is alone; nothing to move
            --counts[res.assignment[far]];
            res.assignment[far] = c;
            counts[c] = 1;
            own_dist[far] = 0.0;
            reseeded = true;
        }
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), x.cols());
        for (std::size_t i = 0; i < n; ++i) sums.row(static_cast<Eigen::Index>(res.assignment[i])) += x.row(static_cast<Eigen::Index>(i));
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) res.centroids.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
        }
        if (!changed && !reseeded) break;
    }
    return res;
}

RbfnStructure rbfn_structure(const Eigen::MatrixXd& x, std::size_t k, std::uint64_t seed) {
    KMeansResult km = kmeans(x, k, seed);
    RbfnStructure s;
    s.centroids = km.centroids;
    s.base_widths = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < km.assignment.size(); ++i) {
        const std::size_t c = km.assignment[i];
        ++counts[c];
        s.base_widths(static_cast<Eigen::Index>(c)) +=
            (x.row(static_cast<Eigen::Index>(i)) - km.centroids.row(static_cast<Eigen::Index>(c))).norm();
    }
    double positive_sum = 0.0;
    std::size_t positive = 0;
    for (std::size_t c = 0; c < k; ++c) {
        auto& w = s.base_widths(static_cast<Eigen::Index>(c));
        if (counts[c] > 0) w /= static_cast<double>(counts[c]);
        if (counts[c] <= 1 || !(w > 0.0)) {
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t o = 0; o < k; ++o) {
                if (o == c) continue;
                const double d = (km.centroids.row(static_cast<Eigen::Index>(o)) - km.centroids.row(static_cast<Eigen::Index>(c))).norm();
                if (d > 0.0) nearest = std::min(nearest, d);
            }
            w = std::isfinite(nearest) ? nearest : 0.0;
        }
        if (w > 0.0) {
            positive_sum += w;
            ++positive;
        }
    }
    // Remaining zero widths (all data identical) fall back to the average positive width, else 1.
    const double fallback = positive > 0 ? positive_sum / static_cast<double>(positive) : 1.0;
    for (Eigen::Index c = 0; c < s.base_widths.size(); ++c)
        if (!(s.base_widths(c) > 0.0)) s.base_widths(c) = fallback;
    return s;
}

double RbfnModel::predict_one(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x.size(), centroids.cols());
    double out = bias;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) out += weights(c) * rbf_kernel(x, centroids.row(c).transpose(), widths(c));
    return out;
}

Eigen::VectorXd RbfnModel::predict(const Eigen::MatrixXd& x) const {
    check_dim(x.cols(), centroids.cols());
    const Eigen::MatrixXd d2 = squared_distances(x, centroids);
    Eigen::MatrixXd phi(d2.rows(), d2.cols());
    for (Eigen::Index c = 0; c < d2.cols(); ++c) phi.col(c) = (-d2.col(c).array() / (2.0 * widths(c) * widths(c))).exp();
    return (phi * weights).array() + bias;
}

RbfnModel fit_rbfn_weights(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::MatrixXd centroids,
                           Eigen::VectorXd widths) {
    check_xy(x, y);
    check_dim(x.cols(), centroids.cols());
    if (widths.size() != centroids.rows()) throw ConfigError("one width per centroid required");
    for (Eigen::Index c = 0; c < widths.size(); ++c) check_sigma(widths(c));
    RbfnModel m;
    m.centroids = std::move(centroids);
    m.widths = std::move(widths);
    m.k = static_cast<std::size_t>(m.centroids.rows());
    m.weights = Eigen::VectorXd::Zero(m.centroids.rows());
    m.bias = 0.0;
    const Eigen::MatrixXd d2 = squared_distances(x, m.centroids);
    Eigen::MatrixXd phi(d2.rows(), d2.cols());
    for (Eigen::Index c = 0; c < d2.cols(); ++c) phi.col(c) = (-d2.col(c).array() / (2.0 * m.widths(c) * m.widths(c))).exp();
    auto [w, b] = centered_least_squares(phi, y);
    m.weights = std::move(w);
    m.bias = b;
    return m;
}

RbfnModel fit_rbfn(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const RbfnStructure& structure, double wsf) {
    if (!(wsf > 0.0)) throw ConfigError("width scaling factor must be positive");
    RbfnModel m = fit_rbfn_weights(x, y, structure.centroids, structure.base_widths * wsf);
    m.wsf = wsf;
    return m;
}

RbfnModel fit_rbfn(const Dataset& train, std::size_t k, double wsf, std::uint64_t seed) {
    if (k == 0 || k > train.rows()) {
        throw ConfigError("RBFN needs 1 <= K <= N (K = " + std::to_string(k) + ", N = " + std::to_string(train.rows()) + ")");
    }
    if (!(wsf > 0.0)) throw ConfigError("width scaling factor must be positive");
    return fit_rbfn(train.x(), train.y(), rbfn_structure(train.x(), k, seed), wsf);
}

// ---------------------------------------------------------------------------

namespace {

using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

LongVector combined_alpha(const LssvmModel& m) {
    LongVector a = m.alpha.cast<long double>();
    if (m.alpha_lo.size() == a.size()) a += m.alpha_lo.cast<long double>();
    return a;
}

}  // namespace

double LssvmModel::predict_one(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x.size(), support.cols());
    const LongVector a = combined_alpha(*this);
    long double out = bias;
    for (Eigen::Index i = 0; i < support.rows(); ++i) out += a(i) * rbf_kernel(x, support.row(i).transpose(), sigma);
    return static_cast<double>(out);
}

Eigen::VectorXd LssvmModel::predict(const Eigen::MatrixXd& x) const {
    check_dim(x.cols(), support.cols());
    const Eigen::MatrixXd k = kernel_matrix(x, support, sigma);
    const LongVector a = combined_alpha(*this);
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        long double acc = bias;
        for (Eigen::Index c = 0; c < k.cols(); ++c) acc += static_cast<long double>(k(r, c)) * a(c);
        out(r) = static_cast<double>(acc);
    }
    return out;
}

namespace {

// Residual of the dual system, in extended precision:
//   r = y - b 1 - (Omega + I/gamma) alpha,   s = -1'alpha.
std::pair<Eigen::VectorXd, double> dual_residual(const Eigen::MatrixXd& omega, const Eigen::VectorXd& y,
                                                 const LongVector& alpha, long double b, double gamma) {
    const Eigen::Index n = y.size();
    Eigen::VectorXd r(n);
    long double s = 0.0L;
    for (Eigen::Index i = 0; i < n; ++i) {
        long double acc = static_cast<long double>(y(i)) - b - alpha(i) / gamma;
        for (Eigen::Index j = 0; j < n; ++j) acc -= static_cast<long double>(omega(i, j)) * alpha(j);
        r(i) = static_cast<double>(acc);
        s -= alpha(i);
    }
    return {r, static_cast<double>(s)};
}

// Mixed-precision refinement of (alpha, b): residuals and the running
// solution in long double, corrections from the double factorization
// solve_h of Omega + I/gamma. Writes alpha as a high/low pair.
template <typename SolveH>
void refine_dual(const Eigen::MatrixXd& omega, const Eigen::VectorXd& y, double gamma, const SolveH& solve_h,
                 const Eigen::VectorXd& eta, LssvmModel& m) {
    LongVector alpha = m.alpha.cast<long double>();
    long double b = m.bias;
    const double ones_eta = eta.sum();
    for (int step = 0; step < 6; ++step) {
        auto [r, s] = dual_residual(omega, y, alpha, b, gamma);
        if (r.cwiseAbs().maxCoeff() == 0.0 && s == 0.0) break;
        const Eigen::VectorXd hr = solve_h(r);
        const double db = (hr.sum() - s) / ones_eta;
        alpha += (hr - db * eta).cast<long double>();
        b += db;
    }
    m.alpha = alpha.cast<double>();
    m.alpha_lo = (alpha - m.alpha.cast<long double>()).cast<double>();
    m.bias = static_cast<double>(b);
}

}  // namespace

LssvmModel fit_lssvm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double sigma, double gamma) {
    check_xy(x, y);
    check_sigma(sigma);
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("regularization gamma must be positive");
    const Eigen::Index n = x.rows();
    const Eigen::MatrixXd omega = kernel_matrix(x, x, sigma);
    Eigen::MatrixXd h = omega;
    h.diagonal().array() += 1.0 / gamma;

    // Block elimination of the bias row: H eta = 1, H nu = y, b = 1'nu / 1'eta.
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) throw NumericalError("LS-SVM system is not positive definite");
    const double rcond = llt.rcond();
    if (!(rcond > 1e-15)) {
        std::ostringstream msg;
        msg << "LS-SVM system is numerically singular (reciprocal condition estimate " << rcond << ")";
        throw NumericalError(msg.str());
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd eta = llt.solve(ones);
    for (int step = 0; step < 2; ++step) eta += llt.solve(ones - h * eta);
    const Eigen::VectorXd nu = llt.solve(y);

    LssvmModel m;
    m.support = x;
    m.sigma = sigma;
    m.gamma = gamma;
    m.bias = nu.sum() / eta.sum();
    m.alpha = nu - m.bias * eta;
    refine_dual(omega, y, gamma, [&](const Eigen::VectorXd& r) { return Eigen::VectorXd(llt.solve(r)); }, eta, m);
    if (!m.alpha.allFinite() || !std::isfinite(m.bias)) throw NumericalError("LS-SVM solution is not finite");
    return m;
}

LssvmModel fit_lssvm(const Dataset& train, double sigma, double gamma) {
    return fit_lssvm(train.x(), train.y(), sigma, gamma);
}

double lssvm_kkt_residual(const LssvmModel& m, const Eigen::VectorXd& y) {
    if (y.size() != m.support.rows() || m.alpha.size() != m.support.rows())
        throw ConfigError("targets do not match the model's training samples");
    const Eigen::MatrixXd omega = kernel_matrix(m.support, m.support, m.sigma);
    const LongVector a = combined_alpha(m);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        long double fitted = m.bias;
        for (Eigen::Index j = 0; j < y.size(); ++j) fitted += static_cast<long double>(omega(i, j)) * a(j);
        const long double r = a(i) - m.gamma * (static_cast<long double>(y(i)) - fitted);
        worst = std::max(worst, static_cast<double>(std::abs(r)));
    }
    return worst;
}

LssvmPath::LssvmPath(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double sigma)
    : x_(x), sigma_(sigma), kernel_(kernel_matrix(x, x, sigma)) {
    check_xy(x, y);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kernel_);
    if (eig.info() != Eigen::Success) throw NumericalError("kernel eigendecomposition failed");
    eigvecs_ = eig.eigenvectors();
    eigvals_ = eig.eigenvalues().cwiseMax(0.0);
    q_ones_ = eigvecs_.transpose() * Eigen::VectorXd::Ones(x.rows());
    q_y_ = eigvecs_.transpose() * y;
    y_ = y;
}

std::pair<Eigen::VectorXd, double> LssvmPath::solve(double gamma) const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("regularization gamma must be positive");
    const Eigen::ArrayXd inv = 1.0 / (eigvals_.array() + 1.0 / gamma);
    const double s1 = (q_ones_.array().square() * inv).sum();
    const double s2 = (q_ones_.array() * q_y_.array() * inv).sum();
    const double b = s2 / s1;
    Eigen::VectorXd alpha = eigvecs_ * ((q_y_.array() - b * q_ones_.array()) * inv).matrix();
    return {std::move(alpha), b};
}

LssvmModel LssvmPath::model(double gamma) const {
    auto [alpha, b] = solve(gamma);
    const Eigen::ArrayXd inv = 1.0 / (eigvals_.array() + 1.0 / gamma);
    auto solve_h = [&](const Eigen::VectorXd& r) {
        return Eigen::VectorXd(eigvecs_ * ((eigvecs_.transpose() * r).array() * inv).matrix());
    };
    const Eigen::VectorXd eta = eigvecs_ * (q_ones_.array() * inv).matrix();
    LssvmModel m;
    m.support = x_;
    m.alpha = std::move(alpha);
    m.bias = b;
    m.sigma = sigma_;
    m.gamma = gamma;
    refine_dual(kernel_, y_, gamma, solve_h, eta, m);
    return m;
}

// ---------------------------------------------------------------------------

double LinearModel::predict_one(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x.size(), coefficients.size());
    return intercept + coefficients.dot(x);
}

Eigen::VectorXd LinearModel::predict(const Eigen::MatrixXd& x) const {
    check_dim(x.cols(), coefficients.size());
    return (x * coefficients).array() + intercept;
}

LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    check_xy(x, y);
    auto [coef, b] = centered_least_squares(x, y);
    return LinearModel{std::move(coef), b};
}

LinearModel fit_linear(const Dataset& train) { return fit_linear(train.x(), train.y()); }

}  // namespace mirsel
