#include "mirsel/error.hpp"
#include "mirsel/eval.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

using namespace mirsel;

TEST_CASE("nmse definitional values") {
    Eigen::Vector3d y(1.0, 2.0, 4.0);
    CHECK(nmse(y, y, 3.0) == 0.0);
    CHECK(nmse(Eigen::Vector2d(1.0, -1.0), Eigen::Vector2d(0.0, 0.0), 2.0) == 0.5);

    // Predicting the all-sample mean gives var(subset) / var(all) up to the n-1 vs n factor.
    Eigen::VectorXd all(6);
    all << 1, 3, 2, 7, 5, 6;
    const double var_all = sample_variance(all);
    const Eigen::VectorXd sub = all.head(4);
    const double expected = (sub.array() - all.mean()).square().mean() / var_all;
    CHECK(nmse(Eigen::VectorXd::Constant(4, all.mean()), sub, var_all) == doctest::Approx(expected));
    CHECK(nmse(Eigen::VectorXd::Constant(6, all.mean()), all, var_all) == doctest::Approx(5.0 / 6.0));

    CHECK_THROWS_AS(nmse(y, Eigen::Vector2d(1, 2), 1.0), ConfigError);
    CHECK_THROWS_AS(nmse(y, y, 0.0), ConfigError);
    CHECK_THROWS_AS(nmse(y, y, -1.0), ConfigError);
}

TEST_CASE("fold sizes and partition") {
    for (auto [n, l] : {std::pair<std::size_t, std::size_t>{172, 4}, {149, 3}, {10, 10}, {7, 2}}) {
        auto folds = kfold_split(n, l, 42);
        REQUIRE(folds.size() == l);
        std::set<std::size_t> seen;
        std::size_t lo = n, hi = 0;
        for (const auto& f : folds) {
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
            for (std::size_t i : f) CHECK(seen.insert(i).second);
        }
        CHECK(seen.size() == n);
        CHECK(*seen.rbegin() == n - 1);
        CHECK(hi - lo <= 1);
    }
    for (const auto& f : kfold_split(172, 4, 1)) CHECK(f.size() == 43);
    auto juice = kfold_split(149, 3, 1);
    CHECK(juice[0].size() == 50);
    CHECK(juice[1].size() == 50);
    CHECK(juice[2].size() == 49);
    for (const auto& f : kfold_split(10, 10, 3)) CHECK(f.size() == 1);

    CHECK(kfold_split(50, 4, 9) == kfold_split(50, 4, 9));
    CHECK(kfold_split(50, 4, 9) != kfold_split(50, 4, 10));
    CHECK_THROWS_AS(kfold_split(3, 4, 0), ConfigError);
    CHECK_THROWS_AS(kfold_split(3, 1, 0), ConfigError);
}

TEST_CASE("percentile interpolates between order statistics") {
    CHECK(percentile({4, 1, 3, 2}, 0.5) == 2.5);
    CHECK(percentile({4, 1, 3, 2}, 1.0) == 4.0);
    CHECK(percentile({4, 1, 3, 2}, 0.0) == 1.0);
    // position 0.99 * 3 = 2.97
    CHECK(percentile({0, 10, 20, 30}, 0.99) == doctest::Approx(29.7));
    CHECK(median({5, 1, 3}) == 3.0);
    CHECK_THROWS_AS(percentile({}, 0.5), ConfigError);
}

TEST_CASE("outlier trimming") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);

    std::vector<double> e100(100);
    for (auto& e : e100) e = 0.1 * g(rng);
    e100[37] = 50.0;
    CHECK(trim_outliers(e100).size() == 99);
    auto kept = trim_outliers(e100);
    CHECK(std::find(kept.begin(), kept.end(), 37) == kept.end());

    std::vector<double> e200(200);
    for (auto& e : e200) e = g(rng);
    e200[3] = -80.0;
    e200[150] = 90.0;
    kept = trim_outliers(e200);
    CHECK(kept.size() == 198);
    CHECK(std::find(kept.begin(), kept.end(), 3) == kept.end());
    CHECK(std::find(kept.begin(), kept.end(), 150) == kept.end());

    CHECK(trim_outliers(std::vector<double>(100, 0.7)).size() == 100);
    CHECK(trim_outliers({1.0}).size() == 1);
}

TEST_CASE("meta grid enumeration") {
    MetaGrid g{{"k", "wsf"}, {{1, 2, 3}, {0.5, 2.0}}};
    CHECK(g.size() == 6);
    CHECK(g.params(0).k == 1);
    CHECK(g.params(1).wsf == 2.0);
    CHECK(g.params(4).k == 3);
    CHECK(g.params(4).wsf == 0.5);
    CHECK_THROWS_AS(g.value(0, "sigma"), ConfigError);
    CHECK(MetaGrid{}.size() == 1);
    CHECK_THROWS_AS((MetaGrid{{"k"}, {{}}}.validate()), ConfigError);
    CHECK_THROWS_AS((MetaGrid{{"depth"}, {{1}}}.validate()), ConfigError);

    auto v = log_space(1e-3, 1e6, 300);
    CHECK(v.size() == 300);
    CHECK(v.front() == 1e-3);
    CHECK(v.back() == 1e6);
    CHECK(v[100] / v[99] == doctest::Approx(std::pow(1e9, 1.0 / 299.0)));

    Eigen::MatrixXd pts(3, 1);
    pts << 0, 1, 3;
    CHECK(median_pairwise_distance(pts) == 2.0);
}

TEST_CASE("default grids follow fold sizes and data scale") {
    std::mt19937_64 rng(6);
    Dataset d(testutil::normal_matrix(rng, 40, 5), testutil::normal_matrix(rng, 40, 1).col(0));
    PipelineSpec lin{.model = ModelKind::Linear, .projection = ProjectionKind::PCA};
    MetaGrid g = default_grid(d, lin, 4);
    CHECK(g.axes == std::vector<std::string>{"components"});
    CHECK(g.values[0].size() == 5);

    PipelineSpec rb{.model = ModelKind::Rbfn};
    g = default_grid(Dataset(testutil::normal_matrix(rng, 20, 2), Eigen::VectorXd::Ones(20)), rb, 4);
    CHECK(g.values[0].back() == 15.0);
    CHECK(g.values[1].size() == 15);

    PipelineSpec ls{.model = ModelKind::Lssvm};
    g = default_grid(d, ls, 4, {.n_sigma = 5, .n_gamma = 7});
    CHECK(g.size() == 35);
    const double dbar = median_pairwise_distance(d.x());
    CHECK(g.values[0].front() == doctest::Approx(1e-2 * dbar));
    CHECK(g.values[0].back() == doctest::Approx(1e2 * dbar));
}

TEST_CASE("single-point grid is plain l-fold evaluation") {
    std::mt19937_64 rng(7);
    Eigen::MatrixXd x = testutil::normal_matrix(rng, 30, 2);
    Eigen::VectorXd y = x.col(0) - x.col(1) + 0.3 * testutil::normal_matrix(rng, 30, 1).col(0);
    Dataset d(x, y);
    CvOptions opt{.folds = 3, .seed = 11, .workers = 1, .trim_validation = false};
    CvReport r = cross_validate(d, PipelineSpec{}, MetaGrid{}, opt, 2.0);
    REQUIRE(r.points.size() == 1);

    // Independent oracle: normal equations per fold.
    double mean_v = 0.0;
    for (const auto& val : kfold_split(30, 3, 11)) {
        std::vector<std::size_t> tr;
        for (std::size_t i = 0; i < 30; ++i)
            if (std::find(val.begin(), val.end(), i) == val.end()) tr.push_back(i);
        Eigen::MatrixXd a(tr.size(), 3);
        Eigen::VectorXd b(tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) {
            a.row(i) << 1.0, x(tr[i], 0), x(tr[i], 1);
            b(i) = y(tr[i]);
        }
        Eigen::Vector3d coef = (a.transpose() * a).ldlt().solve(a.transpose() * b);
        double sse = 0.0;
        for (std::size_t i : val) {
            const double p = coef(0) + coef(1) * x(i, 0) + coef(2) * x(i, 1);
            sse += (p - y(i)) * (p - y(i));
        }
        mean_v += sse / static_cast<double>(val.size()) / 2.0 / 3.0;
    }
    CHECK(r.points[0].mean_v == doctest::Approx(mean_v).epsilon(1e-10));
}

TEST_CASE("linear data is fitted exactly at the true component count") {
    std::mt19937_64 rng(8);
    Eigen::MatrixXd latent = testutil::normal_matrix(rng, 60, 3);
    Eigen::MatrixXd mix = testutil::normal_matrix(rng, 3, 8);
    Eigen::MatrixXd x = latent * mix;
    Eigen::VectorXd y = latent * Eigen::Vector3d(1.0, -2.0, 0.5);
    Dataset d(x, y);
    for (ProjectionKind kind : {ProjectionKind::PCA, ProjectionKind::PLS}) {
        PipelineSpec spec{.model = ModelKind::Linear, .projection = kind};
        MetaGrid g{{"components"}, {{1, 2, 3}}};
        CvReport r = cross_validate(d, spec, g, {.folds = 4, .seed = 1, .workers = 1}, sample_variance(y));
        CHECK(r.points[2].mean_v < 1e-20);
        CHECK(r.points[0].mean_v > 1e-3);
        CHECK(r.winner == 2);
        CHECK(r.winner_params.components == 3);
    }
}

TEST_CASE("validation picks fewer RBFN centroids than samples on noisy data") {
    std::mt19937_64 rng(9);
    Eigen::MatrixXd x = testutil::uniform_matrix(rng, 48, 1, -2, 2);
    Eigen::VectorXd y = (2 * x.col(0).array()).sin().matrix() + 0.3 * testutil::normal_matrix(rng, 48, 1).col(0);
    Dataset d(x, y);
    MetaGrid g{{"k", "wsf"}, {{1, 2, 4, 8, 16, 36}, log_space(0.1, 10.0, 7)}};
    CvReport r = cross_validate(d, PipelineSpec{.model = ModelKind::Rbfn}, g, {.folds = 4, .seed = 2, .workers = 1},
                                sample_variance(y));
    CHECK(r.winner_params.k < 36);
    CHECK(r.points[g.size() - 1].ok());
}

TEST_CASE("fit failures are recorded per grid point") {
    std::mt19937_64 rng(10);
    Dataset d(testutil::normal_matrix(rng, 20, 2), testutil::normal_matrix(rng, 20, 1).col(0));
    // 16 training rows per fold cannot host 18 centroids.
    MetaGrid g{{"k", "wsf"}, {{2, 18}, {1.0}}};
    CvReport r = cross_validate(d, PipelineSpec{.model = ModelKind::Rbfn}, g, {.folds = 5, .seed = 0, .workers = 1}, 1.0);
    CHECK(r.points[0].ok());
    CHECK_FALSE(r.points[1].ok());
    CHECK(std::isnan(r.points[1].mean_v));
    CHECK(r.winner == 0);
    CHECK_THROWS_AS(cross_validate(d, PipelineSpec{.model = ModelKind::Rbfn}, MetaGrid{{"sigma"}, {{1.0}}}, {}, 1.0),
                    ConfigError);
}

TEST_CASE("test rows are read exactly once and never during validation") {
    std::mt19937_64 rng(11);
    Eigen::MatrixXd x = testutil::normal_matrix(rng, 50, 3);
    Eigen::VectorXd y = x.col(0) + 0.1 * testutil::normal_matrix(rng, 50, 1).col(0);
    Dataset all(x, y);
    std::vector<std::size_t> tr(40), te(10);
    std::iota(tr.begin(), tr.end(), 0);
    std::iota(te.begin(), te.end(), 40);
    TestSetGuard guard(all.select_rows(te));
    CvReport r = cross_validate(all.select_rows(tr), PipelineSpec{}, MetaGrid{}, {.folds = 4}, sample_variance(y),
                                &guard);
    CHECK(guard.reads() == 1);
    REQUIRE(r.nmse_test.has_value());
    CHECK(*r.nmse_test < 0.1);
    CHECK_THROWS_AS(guard.read(), std::logic_error);
}

TEST_CASE("trimmed indices belong to their validation folds") {
    std::mt19937_64 rng(12);
    Eigen::MatrixXd x = testutil::normal_matrix(rng, 200, 2);
    Eigen::VectorXd y = x.col(0) + 0.05 * testutil::normal_matrix(rng, 200, 1).col(0);
    y(17) += 40.0;
    CvReport r = cross_validate(Dataset(x, y), PipelineSpec{}, MetaGrid{}, {.folds = 4, .seed = 3}, 1.0);
    bool seen17 = false;
    for (std::size_t f = 0; f < 4; ++f) {
        const auto& val = r.folds[f];
        for (std::size_t t : r.points[0].folds[f].trimmed) {
            CHECK(std::find(val.begin(), val.end(), t) != val.end());
            seen17 |= t == 17;
        }
        CHECK(r.points[0].folds[f].trimmed.size() <= 1);
    }
    CHECK(seen17);
}

TEST_CASE("LS-SVM grid search is independent of worker count") {
    std::mt19937_64 rng(13);
    Eigen::MatrixXd x = testutil::uniform_matrix(rng, 60, 2);
    Eigen::VectorXd y = (3 * x.col(0).array()).sin().matrix() + x.col(1).cwiseAbs2() +
                        0.05 * testutil::normal_matrix(rng, 60, 1).col(0);
    Dataset d(x, y);
    PipelineSpec spec{.model = ModelKind::Lssvm};
    MetaGrid g = default_grid(d, spec, 3, {.n_sigma = 8, .n_gamma = 12});
    CvReport a = cross_validate(d, spec, g, {.folds = 3, .seed = 4, .workers = 1}, sample_variance(y));
    CvReport b = cross_validate(d, spec, g, {.folds = 3, .seed = 4, .workers = 3}, sample_variance(y));
    CHECK(a.winner == b.winner);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(a.points[i].mean_v == b.points[i].mean_v);
    REQUIRE(a.kkt_residual.has_value());
    CHECK(*a.kkt_residual < 1e-6 * y.cwiseAbs().maxCoeff());
    CHECK(a.points[a.winner].mean_v < 0.1);
}

TEST_CASE("projected and whitened inputs feed the nonlinear models") {
    std::mt19937_64 rng(14);
    Eigen::MatrixXd latent = testutil::normal_matrix(rng, 80, 2);
    Eigen::MatrixXd x = latent * testutil::normal_matrix(rng, 2, 10) + 0.01 * testutil::normal_matrix(rng, 80, 10);
    Eigen::VectorXd y = latent.col(0).array().square().matrix() + latent.col(1);
    Dataset d(x, y);
    PipelineSpec spec{.model = ModelKind::Rbfn, .projection = ProjectionKind::PCA, .components = 2, .whiten = true};
    MetaGrid g = default_grid(d, spec, 4, {.max_k = 12, .n_wsf = 5});
    CvReport r = cross_validate(d, spec, g, {.folds = 4, .seed = 5}, sample_variance(y));
    REQUIRE(r.final_model.projection.has_value());
    CHECK(r.final_model.projection->n_components() == 2);
    CHECK(r.final_model.whitener.has_value());
    CHECK(r.points[r.winner].mean_v < 0.2);
    CHECK_THROWS_AS(cross_validate(d, PipelineSpec{.model = ModelKind::Rbfn, .projection = ProjectionKind::PCA}, g, {}, 1.0), ConfigError);
}
