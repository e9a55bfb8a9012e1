#include "mirsel/baselines.hpp"
#include "mirsel/error.hpp"
#include "mirsel/models.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace mirsel;

namespace {

Dataset noisy_linear(std::uint64_t seed, Eigen::Index n, Eigen::Index m) {
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd x = testutil::normal_matrix(rng, n, m);
    // Correlated columns, as in spectra.
    for (Eigen::Index j = 1; j < m; ++j) x.col(j) += 0.5 * x.col(j - 1);
    Eigen::VectorXd beta = Eigen::VectorXd::LinSpaced(m, -1.0, 2.0);
    Eigen::VectorXd y = x * beta + 0.1 * testutil::normal_matrix(rng, n, 1).col(0);
    return Dataset(x, y);
}

}  // namespace

TEST_CASE("PCA on points along a line") {
    std::mt19937_64 rng(1);
    Eigen::VectorXd t = testutil::normal_matrix(rng, 50, 1).col(0);
    Eigen::MatrixXd x(50, 2);
    x.col(0) = 3.0 * t.array() + 1.0;
    x.col(1) = -2.0 * t.array() + 0.5;
    x += 1e-4 * testutil::normal_matrix(rng, 50, 2);
    Projection p = fit_pca(Dataset(x, Eigen::VectorXd::Zero(50)), 2);
    const double total = p.explained_variance.sum();
    CHECK(p.explained_variance(0) / total > 0.9999);
    // Sign convention: largest-magnitude loading element positive.
    CHECK(p.loadings(0, 0) > 0.0);
    CHECK(p.loadings(0, 0) == doctest::Approx(3.0 / std::sqrt(13.0)).epsilon(1e-4));
}

TEST_CASE("PCA loadings are orthonormal and reconstruct the data") {
    Dataset d = noisy_linear(2, 40, 6);
    Projection p = fit_pca(d, 6);
    CHECK((p.loadings.transpose() * p.loadings - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
    const Eigen::MatrixXd centered = d.x().rowwise() - d.x().colwise().mean();
    const Eigen::MatrixXd scores = transform(p, d.x());
    CHECK((scores * p.loadings.transpose() - centered).cwiseAbs().maxCoeff() < 1e-8);
    for (Eigen::Index c = 1; c < 6; ++c) CHECK(p.explained_variance(c) <= p.explained_variance(c - 1));
    for (Eigen::Index c = 0; c < 6; ++c) {
        Eigen::Index at = 0;
        p.loadings.col(c).cwiseAbs().maxCoeff(&at);
        CHECK(p.loadings(at, c) > 0.0);
        CHECK(testutil::column_variance(scores, c) == doctest::Approx(p.explained_variance(c)).epsilon(1e-10));
    }
}

TEST_CASE("component count limits") {
    Dataset d = noisy_linear(3, 5, 8);
    CHECK(max_components(5, 8) == 4);
    CHECK(max_components(40, 6) == 6);
    CHECK_THROWS_AS(fit_pca(d, 5), ConfigError);
    CHECK_THROWS_AS(fit_pls(d, 0), ConfigError);
    CHECK_NOTHROW(fit_pls(d, 4));
    Projection p = fit_pca(d, 4);
    CHECK(p.truncated(2).n_components() == 2);
    CHECK_THROWS_AS(p.truncated(5), ConfigError);
    CHECK_THROWS_AS(transform(p, Eigen::MatrixXd::Zero(3, 7)), ConfigError);
}

TEST_CASE("PLS direction on one input follows the sign of the covariance") {
    Eigen::MatrixXd x(4, 1);
    x << 1, 2, 3, 4;
    Projection up = fit_pls(Dataset(x, Eigen::Vector4d(0.5, 0.7, 1.9, 2.0)), 1);
    Projection down = fit_pls(Dataset(x, Eigen::Vector4d(3.0, 1.0, 0.0, -2.0)), 1);
    // w = X'y / |X'y| = +-1, p = X't / t't = 1, so R = w.
    CHECK(up.loadings(0, 0) == doctest::Approx(1.0));
    CHECK(down.loadings(0, 0) == doctest::Approx(-1.0));
    CHECK(up.y_mean == doctest::Approx(1.275));
}

TEST_CASE("PLS training scores are mutually orthogonal") {
    Dataset d = noisy_linear(4, 60, 10);
    Projection p = fit_pls(d, 6);
    REQUIRE(p.n_components() == 6);
    const Eigen::MatrixXd t = transform(p, d.x());
    const Eigen::MatrixXd g = t.transpose() * t;
    for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = 0; j < 6; ++j)
            if (i != j) CHECK(std::abs(g(i, j)) < 1e-8 * std::sqrt(g(i, i) * g(j, j)));
}

TEST_CASE("truncating a PLS projection equals fitting fewer components") {
    Dataset d = noisy_linear(5, 50, 8);
    Projection full = fit_pls(d, 7);
    for (std::size_t n = 1; n <= 7; ++n) {
        Projection small = fit_pls(d, n);
        CHECK((full.truncated(n).loadings - small.loadings).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("saturated PLS and PCR regressions equal ordinary least squares") {
    Dataset d = noisy_linear(6, 30, 5);
    const Eigen::VectorXd ols = fit_linear(d).predict(d.x());
    for (auto fit : {fit_pls, fit_pca}) {
        Projection p = fit(d, 5, {});
        const Dataset scores = transform(p, d);
        const Eigen::VectorXd via_scores = fit_linear(scores).predict(scores.x());
        CHECK((via_scores - ols).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("PLS stops early when no covariance remains") {
    // y depends on one direction only; after one component nothing is left.
    Eigen::MatrixXd x(6, 3);
    x << 1, 0, 0, 2, 1, 0, 3, 0, 1, 4, 1, 1, 5, 0, 0, 6, 1, 0;
    Eigen::VectorXd y = x.col(0);
    Projection p = fit_pls(Dataset(x, y), 3);
    CHECK(p.n_components() >= 1);
    CHECK(p.n_components() < 3);
    CHECK_THROWS_AS(fit_pls(Dataset(x, Eigen::VectorXd::Constant(6, 2.0)), 1), NumericalError);
}

TEST_CASE("transform uses training centering and fixed loadings") {
    Dataset d = noisy_linear(7, 40, 4);
    Projection p = fit_pca(d, 3);
    const Eigen::MatrixXd at_fit = transform(p, d.x());
    CHECK(transform(p, d.x()) == at_fit);

    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 4);
    const Eigen::RowVectorXd expected = -p.x_mean.transpose() * p.loadings;
    CHECK((transform(p, zero).row(0) - expected).cwiseAbs().maxCoeff() < 1e-12);

    std::mt19937_64 rng(8);
    Eigen::MatrixXd test = testutil::uniform_matrix(rng, 5, 4);
    const Eigen::MatrixXd before = transform(p, test);
    const Eigen::MatrixXd loadings = p.loadings;
    test.row(2).array() += 100.0;
    const Eigen::MatrixXd after = transform(p, test);
    CHECK(p.loadings == loadings);
    CHECK(after.row(0) == before.row(0));
    CHECK(after.row(4) == before.row(4));
    CHECK(after.row(2) != before.row(2));

    Dataset scored = transform(p, d);
    CHECK(scored.y() == d.y());
    CHECK(scored.label(0) == "pc1");
    CHECK(transform(fit_pls(d, 2), d).label(1) == "pls2");
}

TEST_CASE("column scaling option") {
    Dataset d = noisy_linear(9, 30, 3);
    Eigen::MatrixXd x = d.x();
    x.col(1) *= 1000.0;
    Projection plain = fit_pca(d.with_x(x), 1);
    Projection scaled = fit_pca(d.with_x(x), 1, {.scale_columns = true});
    CHECK(std::abs(plain.loadings(1, 0)) > 0.999);
    CHECK(std::abs(scaled.loadings(1, 0)) < 0.9);
    CHECK(scaled.x_scale(1) > 100.0);
}

TEST_CASE("whitened scores have unit variance on training rows") {
    Dataset d = noisy_linear(10, 50, 6);
    Dataset scores = whiten_columns(transform(fit_pca(d, 4), d));
    for (Eigen::Index c = 0; c < 4; ++c) {
        CHECK(testutil::column_variance(scores.x(), c) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(scores.x().col(c).mean()) < 1e-12);
    }
}
