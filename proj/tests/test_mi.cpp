#include "pcg/error.hpp"
#include "pcg/mutual_info.hpp"
#include "pcg/rng.hpp"
#include "pcg/threading.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace pcg;

TEST_CASE("4-point joint table gives exactly ln 2") {
    const std::vector<double> feature = {1.0, 1.0, 5.0, 5.0, 1.0, 1.0, 5.0, 5.0, 1.0, 5.0};
    const std::vector<int> labels = {0, 0, 1, 1, 0, 0, 1, 1, 0, 1};
    CHECK(mutual_information(feature, labels, 2) == std::log(2.0));
    // granularity of the binning does not matter when y is bin-determined
    CHECK(mutual_information(feature, labels, 10) == std::log(2.0));
}

TEST_CASE("independent feature scores near zero") {
    Rng rng(1);
    std::vector<double> feature;
    std::vector<int> labels;
    for (int i = 0; i < 1000; ++i) {
        feature.push_back(rng.gaussian());
        labels.push_back(static_cast<int>(rng.uniform_index(2)));
    }
    CHECK(mutual_information(feature, labels) < 0.05);
}

TEST_CASE("median-split indicator scores near ln 2") {
    Rng rng(2);
    std::vector<double> feature;
    for (int i = 0; i < 1000; ++i) feature.push_back(rng.gaussian());
    std::vector<double> sorted = feature;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[500];
    std::vector<int> labels;
    for (double v : feature) labels.push_back(v > median ? 1 : 0);
    CHECK(mutual_information(feature, labels) == doctest::Approx(std::log(2.0)).epsilon(0.08));
}

TEST_CASE("degenerate inputs") {
    std::vector<double> constant(20, 3.0);
    std::vector<int> labels(20);
    for (int i = 0; i < 20; ++i) labels[i] = i % 2;
    CHECK(mutual_information(constant, labels) == 0.0);

    std::vector<double> feature(20, 0.0);
    for (int i = 0; i < 20; ++i) feature[i] = i;
    std::vector<int> single(20, 1);
    CHECK_THROWS_AS(mutual_information(feature, single), PcgError);
}

TEST_CASE("MI is symmetric under label flip and monotone-transform invariant") {
    Rng rng(3);
    std::vector<double> feature;
    std::vector<int> labels, flipped;
    for (int i = 0; i < 300; ++i) {
        const double v = rng.gaussian();
        feature.push_back(v);
        labels.push_back(v + 0.5 * rng.gaussian() > 0 ? 1 : 0);
        flipped.push_back(1 - labels.back());
    }
    CHECK(mutual_information(feature, labels) == mutual_information(feature, flipped));

    std::vector<double> transformed;
    for (double v : feature) transformed.push_back(std::exp(v)); // strictly increasing
    CHECK(mutual_information(feature, labels) == mutual_information(transformed, labels));
}

TEST_CASE("fit_selection keeps round(f*d) with tie-break by column index") {
    Rng rng(4);
    FeatureMatrix X;
    const int d = 72;
    for (int j = 0; j < d; ++j) X.names.push_back("f" + std::to_string(j));
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> row(d);
        for (auto& v : row) v = rng.gaussian();
        y.push_back(i % 2);
        row[7] = y.back() + 0.01 * rng.gaussian(); // near-perfect predictor
        X.rows.push_back(std::move(row));
    }
    const SelectionModel model = fit_selection(X, y, 0.2);
    CHECK(model.selected_indices.size() == 14); // round(0.2 * 72)
    CHECK(model.ranked_names.front() == "f7");
    for (std::size_t i = 1; i < model.mi_scores.size(); ++i)
        CHECK(model.mi_scores[i] <= model.mi_scores[i - 1]);

    SUBCASE("keep_fraction 1.0 keeps everything") {
        CHECK(fit_selection(X, y, 1.0).selected_indices.size() == 72);
    }
    SUBCASE("apply_selection is name-keyed") {
        const FeatureMatrix sel = apply_selection(model, X);
        CHECK(sel.names.size() == 14);
        CHECK(sel.names.front() == "f7");

        FeatureMatrix reordered;
        for (int j = d - 1; j >= 0; --j) reordered.names.push_back(X.names[j]);
        for (const auto& row : X.rows) {
            std::vector<double> r(row.rbegin(), row.rend());
            reordered.rows.push_back(std::move(r));
        }
        const FeatureMatrix sel2 = apply_selection(model, reordered);
        CHECK(sel2.names == sel.names);
        CHECK(sel2.rows == sel.rows);

        FeatureMatrix missing = X;
        missing.names[7] = "renamed";
        CHECK_THROWS_AS(apply_selection(model, missing), PcgError);
    }
    SUBCASE("parallel MI matches serial") {
        set_num_threads(4);
        const SelectionModel par = fit_selection(X, y, 0.2);
        set_num_threads(1);
        CHECK(par.mi_scores == model.mi_scores);
        CHECK(par.ranked_names == model.ranked_names);
    }
}
