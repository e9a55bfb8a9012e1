#include "mirsel/error.hpp"
#include "mirsel/selector.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace mirsel;

namespace {

Dataset noisy_identity(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd x = testutil::uniform_matrix(rng, 300, 10);
    Eigen::VectorXd y = x.col(0) + 0.01 * testutil::normal_matrix(rng, 300, 1).col(0);
    return Dataset(x, y);
}

// Y = sign(X1 X2) + noise: X1 and X2 carry no information alone.
Dataset xor_data(std::uint64_t seed, Eigen::Index n, Eigen::Index decoys) {
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd x = testutil::uniform_matrix(rng, n, 2 + decoys, -1.0, 1.0);
    Eigen::VectorXd noise = testutil::normal_matrix(rng, n, 1).col(0);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = (x(i, 0) * x(i, 1) > 0 ? 1.0 : -1.0) + 0.1 * noise(i);
    return Dataset(x, y);
}

VariableSubset subset_of(std::vector<std::size_t> idx) { return VariableSubset{std::move(idx), Provenance::Manual}; }

}  // namespace

TEST_CASE("Option 1 ranks the informative variable first") {
    Dataset d = noisy_identity(1);
    MiEstimator est(d);
    Selector sel(est);
    auto top = sel.rank_option1(3);
    CHECK(top.indices.front() == 0);
    CHECK(top.provenance == Provenance::Option1);

    auto all = sel.rank_option1(10);
    std::set<std::size_t> cols(all.indices.begin(), all.indices.end());
    CHECK(cols.size() == 10);
    CHECK_THROWS_AS(sel.rank_option1(11), ConfigError);
}

TEST_CASE("duplicated column is ranked right after its original") {
    Dataset d = noisy_identity(2);
    Eigen::MatrixXd x(d.rows(), 11);
    x << d.x(), d.x().col(0);
    MiEstimator est(d.with_x(x));
    auto ranked = Selector(est).rank_all();
    CHECK(ranked[0].column == 0);
    CHECK(ranked[1].column == 10);
    CHECK(ranked[0].mi == ranked[1].mi);
}

TEST_CASE("forward step from empty equals the Option 1 winner") {
    Dataset d = noisy_identity(3);
    MiEstimator est(d);
    Selector sel(est);
    auto fwd = sel.forward_step(VariableSubset{});
    CHECK(fwd.added == sel.rank_option1(1).indices[0]);
    CHECK(fwd.subset.indices == std::vector<std::size_t>{fwd.added});
}

TEST_CASE("forward step finds the XOR partner") {
    Dataset d = xor_data(4, 500, 4);
    MiEstimator est(d);
    auto fwd = Selector(est).forward_step(subset_of({0}));
    CHECK(fwd.added == 1);
    CHECK(fwd.mi.value > est.estimate({0}).value + 0.3);
}

TEST_CASE("forward step matches a direct sweep over candidates") {
    std::mt19937_64 rng(5);
    Eigen::MatrixXd x = testutil::uniform_matrix(rng, 30, 4);
    Eigen::VectorXd y = (x.col(1).array() * 3.0).sin().matrix() + 0.2 * x.col(3);
    Dataset d(x, y);
    MiEstimator est(d);
    auto fwd = Selector(est).forward_step(subset_of({1}));
    std::size_t best = 0;
    double best_mi = -1e9;
    for (std::size_t j : {0, 2, 3}) {
        const double v = estimate_mi(d, std::vector<std::size_t>{1, j}, 6).value;
        if (v > best_mi) {
            best_mi = v;
            best = j;
        }
    }
    CHECK(fwd.added == best);
    CHECK(fwd.mi.value == best_mi);
}

TEST_CASE("forward step with nothing left fails") {
    Dataset d = noisy_identity(6).select_columns(std::vector<std::size_t>{0, 1});
    MiEstimator est(d);
    CHECK_THROWS_AS(Selector(est).forward_step(subset_of({0, 1})), ConfigError);
}

TEST_CASE("backward step drops one copy of a duplicated variable") {
    std::mt19937_64 rng(7);
    Eigen::MatrixXd base = testutil::uniform_matrix(rng, 300, 2);
    Eigen::MatrixXd x(300, 3);
    x << base, base.col(0);
    Eigen::VectorXd y = base.col(1) + 0.05 * testutil::normal_matrix(rng, 300, 1).col(0);
    MiEstimator est(Dataset(x, y));
    Selector sel(est);
    // current = {X1, X3, X2} with X3 == X1 and X2 protected.
    auto res = sel.backward_step(subset_of({0, 2, 1}), 1);
    REQUIRE(res.evaluated.size() == 2);
    CHECK(res.evaluated[0].mi == res.evaluated[1].mi);
    REQUIRE(res.removed.has_value());
    CHECK(*res.removed == 0);  // tie goes to the lower index
    CHECK(res.subset.indices == std::vector<std::size_t>{2, 1});
    CHECK(res.mi.value > est.estimate({0, 2, 1}).value);
}

TEST_CASE("backward step keeps a jointly necessary pair") {
    Dataset d = xor_data(8, 500, 0);
    MiEstimator est(d);
    auto res = Selector(est).backward_step(subset_of({0, 1}), 1);
    CHECK_FALSE(res.removed.has_value());
    CHECK(res.subset.indices == std::vector<std::size_t>{0, 1});
}

TEST_CASE("backward step contract") {
    Dataset d = noisy_identity(9);
    MiEstimator est(d);
    Selector sel(est);
    CHECK_THROWS_AS(sel.backward_step(subset_of({0, 1}), 5), ConfigError);
    // Noise variable next to the protected informative one: removing it can only leave the singleton.
    auto res = sel.backward_step(subset_of({3, 0}), 0);
    if (res.removed) {
        CHECK(res.subset.indices == std::vector<std::size_t>{0});
    }
    CHECK(res.subset.contains(0));
    CHECK(res.subset.size() >= 1);
}

TEST_CASE("backward step never removes the protected variable and removes at most one") {
    for (std::uint64_t seed = 10; seed < 16; ++seed) {
        std::mt19937_64 rng(seed);
        Dataset d(testutil::uniform_matrix(rng, 120, 6), testutil::uniform_matrix(rng, 120, 1).col(0));
        MiEstimator est(d);
        VariableSubset cur = subset_of({5, 1, 3, 0, 2});
        auto res = Selector(est).backward_step(cur, 2);
        CHECK(res.subset.contains(2));
        CHECK(res.subset.size() + (res.removed ? 1 : 0) == cur.size());
    }
}

TEST_CASE("Option 2 with a single variable") {
    std::mt19937_64 rng(17);
    Dataset d(testutil::uniform_matrix(rng, 50, 1), testutil::uniform_matrix(rng, 50, 1).col(0));
    MiEstimator est(d);
    auto res = Selector(est).run_option2();
    CHECK(res.subset.indices == std::vector<std::size_t>{0});
    REQUIRE_FALSE(res.trace.steps.empty());
    CHECK(res.trace.steps.back().kind == StepKind::Stop);
}

TEST_CASE("Option 2 recovers the XOR pair and its trace replays exactly") {
    Dataset d = xor_data(18, 400, 0);
    MiEstimator est(d);
    auto res = Selector(est).run_option2();
    std::set<std::size_t> got(res.subset.indices.begin(), res.subset.indices.end());
    CHECK(got == std::set<std::size_t>{0, 1});
    for (const auto& step : res.trace.steps) {
        if (step.kind == StepKind::Stop && step.subset.empty()) continue;
        CHECK(step.mi == est.estimate(step.subset).value);
    }
}

TEST_CASE("Option 2 on a multi-variable target: stop excludes the final variable, MI rises") {
    std::mt19937_64 rng(19);
    Eigen::MatrixXd x = testutil::uniform_matrix(rng, 400, 8);
    Eigen::VectorXd y = x.col(2) + (3.0 * x.col(5).array()).sin().matrix() +
                        0.05 * testutil::normal_matrix(rng, 400, 1).col(0);
    Dataset d(x, y);
    MiEstimator est(d);
    auto res = Selector(est).run_option2();
    CHECK(res.subset.contains(2));
    CHECK(res.subset.contains(5));
    CHECK(res.mi.value == est.estimate(res.subset.indices).value);

    const auto& last = res.trace.steps.back();
    REQUIRE(last.kind == StepKind::Stop);
    if (last.candidate) {
        CHECK_FALSE(res.subset.contains(*last.candidate));
        CHECK(last.mi < res.mi.value);
    }
    // MI of accepted forward steps strictly increases.
    double prev = -1e300;
    for (const auto& step : res.trace.steps) {
        if (step.kind == StepKind::Forward && step.decision == "best" && &step != &last) {
            if (step.mi < prev) break;  // the rejected final step
            CHECK(step.mi > prev);
            prev = step.mi;
        }
    }
}

TEST_CASE("candidate set construction") {
    VariableSubset a{{4, 0, 7, 1, 9, 3}, Provenance::Option1};
    VariableSubset b_inside{{0, 7}, Provenance::Option2};
    auto c = build_candidate_set(a, b_inside, 4);
    CHECK(c.indices == std::vector<std::size_t>{0, 7, 4, 1});

    VariableSubset b_outside{{8, 0}, Provenance::Option2};
    auto c2 = build_candidate_set(a, b_outside, 4);
    CHECK(c2.indices == std::vector<std::size_t>{8, 0, 4, 7});

    CHECK(build_candidate_set(a, b_inside, 2).indices == b_inside.indices);
    CHECK_THROWS_AS(build_candidate_set(a, b_inside, 1), ConfigError);
    CHECK_THROWS_AS(build_candidate_set(a, b_outside, 9), ConfigError);
}

TEST_CASE("exhaustive search over three candidates equals direct enumeration") {
    std::mt19937_64 rng(21);
    Eigen::MatrixXd x = testutil::uniform_matrix(rng, 200, 5);
    Eigen::VectorXd y = x.col(1) + x.col(3).array().square().matrix() + 0.1 * x.col(4);
    Dataset d(x, y);
    MiEstimator est(d);
    Selector sel(est);
    VariableSubset c{{3, 1, 4}, Provenance::Union};
    auto res = sel.exhaustive_search(c);
    CHECK(res.evaluated == 7);

    std::vector<std::vector<std::size_t>> all{{1}, {3}, {4}, {1, 3}, {1, 4}, {3, 4}, {1, 3, 4}};
    double best = -1e9;
    std::vector<std::size_t> arg;
    for (const auto& s : all) {
        const double v = estimate_mi(d, s, 6).value;
        if (v > best) {
            best = v;
            arg = s;
        }
    }
    CHECK(res.subset.indices == arg);
    CHECK(res.mi.value == best);
    CHECK(res.mi.value >= est.estimate({1}).value);
    CHECK(res.mi.value >= est.estimate({3, 1}).value);
}

TEST_CASE("exhaustive search tie-breaks toward fewer variables") {
    std::mt19937_64 rng(22);
    Eigen::MatrixXd base = testutil::uniform_matrix(rng, 100, 1);
    Eigen::MatrixXd x(100, 2);
    x << base, base;  // identical columns: {0} and {1} tie exactly
    Dataset d(x, base.col(0) + 0.1 * testutil::uniform_matrix(rng, 100, 1).col(0));
    MiEstimator est(d);
    auto res = Selector(est).exhaustive_search(VariableSubset{{1, 0}, Provenance::Union});
    if (res.subset.size() == 1) {
        CHECK(res.subset.indices == std::vector<std::size_t>{0});
    }
}

TEST_CASE("exhaustive search guard and worker independence") {
    std::mt19937_64 rng(23);
    Dataset d(testutil::uniform_matrix(rng, 60, 22), testutil::uniform_matrix(rng, 60, 1).col(0));
    MiEstimator est(d);
    VariableSubset too_many;
    for (std::size_t j = 0; j < 21; ++j) too_many.indices.push_back(j);
    CHECK_THROWS_AS(Selector(est).exhaustive_search(too_many), ConfigError);

    VariableSubset eight{{0, 3, 5, 7, 9, 11, 13, 15}, Provenance::Union};
    auto one = Selector(est, SelectorOptions{.workers = 1}).exhaustive_search(eight);
    auto four = Selector(est, SelectorOptions{.workers = 4}).exhaustive_search(eight);
    CHECK(one.subset.indices == four.subset.indices);
    CHECK(one.mi.value == four.mi.value);
    CHECK(one.evaluated == 255);
}

TEST_CASE("end-to-end selection produces consistent sets") {
    std::mt19937_64 rng(24);
    Eigen::MatrixXd x = testutil::uniform_matrix(rng, 300, 12);
    Eigen::VectorXd y = x.col(0) + x.col(1).array().square().matrix() + 0.05 * testutil::normal_matrix(rng, 300, 1).col(0);
    MiEstimator est(Dataset(x, y));
    auto res = select_variables(est, 6, SelectorOptions{.workers = 2});
    CHECK(res.c.size() == 6);
    for (std::size_t j : res.b.indices) CHECK(res.c.contains(j));
    for (std::size_t j : res.selected.indices) CHECK(res.c.contains(j));
    CHECK(res.selected_mi >= res.b_mi);
    CHECK(res.subsets_evaluated == 63);
    CHECK(res.ranking.size() == 12);
    CHECK(res.selected.contains(0));
    CHECK(res.selected.contains(1));
}
