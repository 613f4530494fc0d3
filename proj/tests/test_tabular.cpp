#include "pcg/boosting.hpp"
#include "pcg/ensemble.hpp"
#include "pcg/error.hpp"
#include "pcg/forest.hpp"
#include "pcg/rng.hpp"
#include "pcg/svm.hpp"
#include "pcg/threading.hpp"
#include "pcg/tree.hpp"

#include <doctest.h>

#include <cmath>

using namespace pcg;

namespace {

const DataMatrix kXor = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
const std::vector<int> kXorY = {0, 1, 1, 0};

std::pair<DataMatrix, std::vector<int>> blobs(int n, double margin, std::uint64_t seed) {
    Rng rng(seed);
    DataMatrix X;
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
        const int cls = i % 2;
        const double cx = cls ? margin : -margin;
        X.push_back({cx + rng.gaussian(), rng.gaussian()});
        y.push_back(cls);
    }
    return {X, y};
}

} // namespace

TEST_CASE("tree: pure data collapses to one leaf") {
    DecisionTree tree;
    Rng rng(0);
    tree.fit_classifier({{0.0}, {1.0}, {2.0}}, {1, 1, 1}, {}, TreeParams{}, rng);
    const auto [p0, p1] = tree.predict_proba({5.0});
    CHECK(p1 == 1.0);
    CHECK(p0 == 0.0);
}

TEST_CASE("tree: 1-D split lands at the Gini-optimal midpoint") {
    DecisionTree tree;
    Rng rng(0);
    tree.fit_classifier({{0.0}, {1.0}, {2.0}, {3.0}}, {0, 0, 1, 1}, {}, TreeParams{}, rng);
    CHECK(tree.nodes().front().feature == 0);
    CHECK(tree.nodes().front().threshold == doctest::Approx(1.5));
}

TEST_CASE("tree: depth 0 gives the class prior") {
    DecisionTree tree;
    TreeParams params;
    params.max_depth = 0;
    Rng rng(0);
    tree.fit_classifier({{0.0}, {1.0}, {2.0}, {3.0}}, {0, 1, 1, 1}, {}, params, rng);
    CHECK(tree.predict_proba({0.0}).second == doctest::Approx(0.75));
}

TEST_CASE("tree predictions are feature-scale invariant") {
    auto [X, y] = blobs(100, 2.0, 5);
    DecisionTree base;
    Rng rng_a(0);
    base.fit_classifier(X, y, {}, TreeParams{}, rng_a);
    DataMatrix scaled = X;
    for (auto& row : scaled) row[0] *= 1000.0;
    DecisionTree big;
    Rng rng_b(0);
    big.fit_classifier(scaled, y, {}, TreeParams{}, rng_b);
    for (int i = 0; i < 30; ++i) {
        std::vector<double> probe = X[i];
        std::vector<double> probe_scaled = {probe[0] * 1000.0, probe[1]};
        CHECK(base.predict_proba(probe).second == big.predict_proba(probe_scaled).second);
    }
}

TEST_CASE("forest separates wide blobs and is thread-invariant") {
    auto [X, y] = blobs(200, 4.0, 6);
    ForestParams params;
    RandomForest rf;
    rf.fit(X, y, params, 11);
    for (std::size_t i = 0; i < X.size(); ++i)
        CHECK((rf.predict_proba(X[i]).second > 0.5 ? 1 : 0) == y[i]);

    set_num_threads(4);
    RandomForest rf2;
    rf2.fit(X, y, params, 11);
    set_num_threads(1);
    for (int i = 0; i < 20; ++i)
        CHECK(rf.predict_proba(X[i]).second == rf2.predict_proba(X[i]).second);
}

TEST_CASE("single-tree forest without bootstrap equals a plain tree") {
    auto [X, y] = blobs(80, 2.0, 7);
    ForestParams params;
    params.n_trees = 1;
    params.bootstrap = false;
    RandomForest rf;
    rf.fit(X, y, params, 3);
    DecisionTree tree;
    Rng rng_t(0);
    tree.fit_classifier(X, y, {}, TreeParams{}, rng_t);
    for (int i = 0; i < 40; ++i)
        CHECK(rf.predict_proba(X[i]).second == tree.predict_proba(X[i]).second);
}

TEST_CASE("boosting: prior at round zero, XOR capacity, monotone loss") {
    GradientBoosting prior_only;
    BoostParams zero;
    zero.n_rounds = 0;
    prior_only.fit({{0.0}, {1.0}, {2.0}, {3.0}}, {0, 1, 1, 1}, zero, 0);
    CHECK(prior_only.predict_proba({9.0}).second == doctest::Approx(0.75));

    GradientBoosting gb;
    BoostParams params;
    params.n_rounds = 50;
    params.max_depth = 2;
    gb.fit(kXor, kXorY, params, 0);
    for (std::size_t i = 0; i < kXor.size(); ++i)
        CHECK((gb.predict_proba(kXor[i]).second > 0.5 ? 1 : 0) == kXorY[i]);

    const auto& curve = gb.loss_curve();
    REQUIRE(curve.size() == 50);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] <= curve[i - 1] + 1e-12);
}

TEST_CASE("svm: symmetric pair puts the boundary at zero") {
    SvmParams params;
    params.kernel = Kernel::linear;
    SvmModel svm;
    svm.fit({{-1.0}, {1.0}}, {0, 1}, params);
    CHECK(svm.decision({0.0}) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(svm.decision({1.0}) > 0.0);
    CHECK(svm.decision({-1.0}) < 0.0);
}

TEST_CASE("svm: rbf solves XOR with KKT feasibility") {
    SvmParams params;
    params.C = 10.0;
    SvmModel svm;
    svm.fit(kXor, kXorY, params);
    for (std::size_t i = 0; i < kXor.size(); ++i)
        CHECK((svm.predict_proba(kXor[i]).second > 0.5 ? 1 : 0) == kXorY[i]);
    CHECK(svm.converged());
    CHECK(svm.dual_balance() <= 1e-6);
}

TEST_CASE("svm: duplicated data with halved C matches the original decision") {
    // duplicating every row doubles the hinge-loss sum, so the primal with
    // C/2 on the doubled set equals the primal with C on the original set
    auto [X, y] = blobs(60, 2.0, 8);
    SvmParams base_params;
    base_params.C = 1.0;
    base_params.tol = 1e-6;
    SvmModel base;
    base.fit(X, y, base_params);
    DataMatrix X2 = X;
    std::vector<int> y2 = y;
    X2.insert(X2.end(), X.begin(), X.end());
    y2.insert(y2.end(), y.begin(), y.end());
    SvmParams half = base_params;
    half.C = 0.5;
    SvmModel doubled;
    doubled.fit(X2, y2, half);
    for (int i = 0; i < 30; ++i)
        CHECK(std::abs(base.decision(X[i]) - doubled.decision(X[i])) < 1e-3);
}

TEST_CASE("probability outputs are normalized") {
    auto [X, y] = blobs(60, 2.0, 9);
    SvmModel svm;
    svm.fit(X, y, SvmParams{});
    RandomForest rf;
    rf.fit(X, y, ForestParams{}, 1);
    GradientBoosting gb;
    gb.fit(X, y, BoostParams{}, 1);
    for (int i = 0; i < 20; ++i) {
        for (auto [p0, p1] : {svm.predict_proba(X[i]), rf.predict_proba(X[i]),
                              gb.predict_proba(X[i])}) {
            CHECK(p0 >= 0.0);
            CHECK(p1 >= 0.0);
            CHECK(p0 + p1 == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("ensemble votes by mean probability, tie rejects") {
    auto [X, y] = blobs(60, 3.0, 10);
    SvmModel svm;
    svm.fit(X, y, SvmParams{});
    RandomForest rf;
    rf.fit(X, y, ForestParams{}, 2);
    GradientBoosting gb;
    gb.fit(X, y, BoostParams{}, 2);
    EnsembleModel ens;
    ens.add_svm(svm);
    ens.add_rf(rf);
    ens.add_gb(gb);
    CHECK(ens.member_count() == 3);
    for (int i = 0; i < 20; ++i) {
        const auto [p0, p1] = ens.predict_proba(X[i]);
        const double mean1 = (svm.predict_proba(X[i]).second + rf.predict_proba(X[i]).second +
                              gb.predict_proba(X[i]).second) /
                             3.0;
        CHECK(p1 == doctest::Approx(mean1).epsilon(1e-12));
        CHECK(ens.predict_label(X[i]) == (p1 > p0 ? 1 : 0));
    }
}

TEST_CASE("ensemble JSON round trip preserves predictions") {
    auto [X, y] = blobs(60, 2.0, 12);
    SvmModel svm;
    svm.fit(X, y, SvmParams{});
    RandomForest rf;
    ForestParams fp;
    fp.n_trees = 20;
    rf.fit(X, y, fp, 4);
    GradientBoosting gb;
    BoostParams bp;
    bp.n_rounds = 20;
    gb.fit(X, y, bp, 4);
    EnsembleModel ens;
    ens.add_svm(svm);
    ens.add_rf(rf);
    ens.add_gb(gb);

    const EnsembleModel back = ensemble_from_json(ensemble_to_json(ens));
    for (int i = 0; i < 30; ++i) {
        CHECK(back.predict_proba(X[i]).second ==
              doctest::Approx(ens.predict_proba(X[i]).second).epsilon(1e-12));
    }
}
