#include "pcg/error.hpp"
#include "pcg/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace pcg;
namespace fs = std::filesystem;

namespace {

Manifest truth_from(const std::vector<int>& labels) {
    Manifest m;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ManifestRow row;
        row.path = "rec" + std::to_string(i);
        row.outcome_label = labels[i] ? Outcome::abnormal : Outcome::normal;
        m.rows.push_back(row);
    }
    return m;
}

std::vector<Prediction> preds_from(const std::vector<double>& scores,
                                   const std::vector<int>& labels) {
    std::vector<Prediction> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        out.push_back({"rec" + std::to_string(i), scores[i], labels[i]});
    return out;
}

} // namespace

TEST_CASE("confusion counts by hand") {
    const ConfusionCounts c = confusion({1, 1, 0, 0}, {1, 0, 0, 1});
    CHECK(c.tp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 1);
    CHECK(c.fp == 1);
    CHECK(c.n() == 4);

    const ConfusionCounts perfect = confusion({1, 0, 1, 0}, {1, 0, 1, 0});
    CHECK(perfect.fp == 0);
    CHECK(perfect.fn == 0);
    CHECK(perfect.tp == 2);
    CHECK(perfect.tn == 2);

    // predict everything positive on a half-positive cohort of 10
    std::vector<int> y, yh(10, 1);
    for (int i = 0; i < 10; ++i) y.push_back(i < 5 ? 1 : 0);
    const ConfusionCounts allpos = confusion(y, yh);
    CHECK(allpos.tp == 5);
    CHECK(allpos.fp == 5);
    CHECK(allpos.tn == 0);
    CHECK(allpos.fn == 0);

    CHECK_THROWS_AS(confusion({1, 0}, {1}), PcgError);
}

TEST_CASE("basic metrics: balanced, perfect, and degenerate cases") {
    const BasicMetrics m = basic_metrics(confusion({1, 1, 0, 0}, {1, 0, 0, 1}));
    CHECK(m.accuracy == doctest::Approx(0.5));
    CHECK(m.precision == doctest::Approx(0.5));
    CHECK(m.recall == doctest::Approx(0.5));
    CHECK(m.specificity == doctest::Approx(0.5));
    CHECK(m.f1 == doctest::Approx(0.5));
    CHECK_FALSE(m.degenerate);

    const BasicMetrics p = basic_metrics(confusion({1, 0}, {1, 0}));
    CHECK(p.accuracy == 1.0);
    CHECK(p.precision == 1.0);
    CHECK(p.recall == 1.0);
    CHECK(p.specificity == 1.0);
    CHECK(p.f1 == 1.0);

    // never predicts positive: precision is 0/0 -> reported 0, flagged
    const BasicMetrics d = basic_metrics(confusion({1, 0, 0}, {0, 0, 0}));
    CHECK(d.precision == 0.0);
    CHECK(d.recall == 0.0);
    CHECK(d.degenerate);
}

TEST_CASE("auroc: hand case, extremes, ties, symmetry, monotone invariance") {
    const std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
    const std::vector<int> y = {0, 0, 1, 1};
    CHECK(auroc(s, y) == doctest::Approx(0.75).epsilon(1e-15));

    CHECK(auroc({0.2, 0.3, 0.7, 0.9}, {0, 0, 1, 1}) == 1.0);
    CHECK(auroc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(auroc({0.1, 0.2}, {1, 1}), PcgError);

    // score negation flips the curve
    std::vector<double> neg = s;
    for (auto& v : neg) v = -v;
    CHECK(auroc(s, y) + auroc(neg, y) == doctest::Approx(1.0).epsilon(1e-12));

    // strictly monotone transform leaves ranks, hence AUROC, unchanged
    std::vector<double> exp_s = s;
    for (auto& v : exp_s) v = std::exp(5.0 * v);
    CHECK(auroc(exp_s, y) == doctest::Approx(auroc(s, y)).epsilon(1e-15));
}

TEST_CASE("screening cost: closed-form checks") {
    CostConfig cfg;

    // nobody referred: only the per-recording algorithm cost plus the
    // expert polynomial at ratio 0 (a0 per recording)
    ConfusionCounts none;
    none.tn = 100;
    CHECK(screening_cost(none, cfg) ==
          doctest::Approx((cfg.c_algorithm + cfg.a0) * 100.0).epsilon(1e-12));

    CostConfig zero;
    zero.c_algorithm = zero.c_treatment = zero.c_error = 0.0;
    zero.a0 = zero.a1 = zero.a2 = zero.a4 = 0.0;
    ConfusionCounts any;
    any.tp = 3;
    any.fp = 2;
    any.tn = 4;
    any.fn = 1;
    CHECK(screening_cost(any, zero) == 0.0);

    // t=100, s=50 (tp=40 referred true + fp=10), fn=10: independent arithmetic
    ConfusionCounts c;
    c.tp = 40;
    c.fp = 10;
    c.tn = 40;
    c.fn = 10;
    const double r = 50.0 / 100.0;
    const double expert =
        cfg.a0 + cfg.a1 * r + cfg.a2 * r * r + cfg.a4 * r * r * r * r;
    const double expect = cfg.c_algorithm * 100.0 + expert * 100.0 +
                          cfg.c_treatment * 40.0 + cfg.c_error * 10.0;
    CHECK(screening_cost(c, cfg) == doctest::Approx(expect).epsilon(1e-12));

    // at a fixed referral/outcome mix, cost is linear in cohort size
    ConfusionCounts c2 = c;
    c2.tp *= 3;
    c2.fp *= 3;
    c2.tn *= 3;
    c2.fn *= 3;
    CHECK(screening_cost(c2, cfg) == doctest::Approx(3.0 * screening_cost(c, cfg)).epsilon(1e-12));
}

TEST_CASE("evaluate_run: joins by id, reports, and errors") {
    const std::vector<int> y = {1, 0, 1, 0, 1, 0};
    const Manifest truth = truth_from(y);
    const std::vector<double> s = {0.9, 0.1, 0.8, 0.2, 0.7, 0.3};
    const CostConfig cfg;

    const EvalReport perfect = evaluate_run(preds_from(s, y), truth, cfg);
    CHECK(perfect.counts.fp == 0);
    CHECK(perfect.counts.fn == 0);
    CHECK(perfect.overall.accuracy == 1.0);
    CHECK(perfect.auroc_defined);
    CHECK(perfect.auroc_value == 1.0);
    CHECK(perfect.class_accuracy[0] == 1.0);
    CHECK(perfect.class_accuracy[1] == 1.0);
    CHECK(perfect.positive_class == "abnormal");

    // turning one true positive into a false negative raises the cost
    std::vector<int> miss = y;
    miss[0] = 0;
    const EvalReport missed = evaluate_run(preds_from(s, miss), truth, cfg);
    CHECK(missed.cost > perfect.cost);
    CHECK(missed.counts.fn == 1);

    // shuffled prediction order joins correctly by id
    auto shuffled = preds_from(s, y);
    std::swap(shuffled[0], shuffled[5]);
    std::swap(shuffled[1], shuffled[3]);
    const EvalReport joined = evaluate_run(shuffled, truth, cfg);
    CHECK(joined.overall.accuracy == 1.0);

    auto stranger = preds_from(s, y);
    stranger[2].id = "not_in_truth";
    CHECK_THROWS_AS(evaluate_run(stranger, truth, cfg), PcgError);
    auto shorter = preds_from(s, y);
    shorter.pop_back();
    CHECK_THROWS_AS(evaluate_run(shorter, truth, cfg), PcgError);

    const std::string json = report_json(perfect, cfg);
    CHECK(json.find("auroc") != std::string::npos);
    CHECK(json.find("confusion") != std::string::npos);
    CHECK(json.find("cost") != std::string::npos);
    CHECK(json.find("positive_class") != std::string::npos);
}

TEST_CASE("predictions CSV round trip") {
    const std::vector<Prediction> preds = {
        {"a.wav", 0.125, 0}, {"b.wav", 0.875, 1}, {"c, with comma", 0.5, 1}};
    const std::string path = (fs::temp_directory_path() / "preds.csv").string();
    write_predictions_csv({preds[0], preds[1]}, path);
    const auto back = read_predictions_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == "a.wav");
    CHECK(back[0].score == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(back[0].label == 0);
    CHECK(back[1].id == "b.wav");
    CHECK(back[1].label == 1);
    fs::remove(path);
}
