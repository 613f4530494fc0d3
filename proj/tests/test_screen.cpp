#include "pcg/error.hpp"
#include "pcg/screen.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

using namespace pcg;
using pcg::nn::cross_entropy_loss;
namespace fs = std::filesystem;

namespace {

DemographicRecord child_record() {
    DemographicRecord rec;
    rec.sex = Sex::male;
    rec.age_group = AgeGroup::child;
    rec.height_cm = 130.0;
    rec.weight_kg = 30.0;
    rec.pregnant = Tristate::no;
    return rec;
}

std::pair<std::vector<std::vector<double>>, std::vector<int>> separable(int n,
                                                                        std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
        const int cls = i % 2;
        std::vector<double> row(8);
        for (auto& v : row) v = rng.gaussian();
        row[0] += cls ? 3.0 : -3.0;
        X.push_back(std::move(row));
        y.push_back(cls);
    }
    return {X, y};
}

} // namespace

TEST_CASE("acBMI: arithmetic, thresholds, missing handling") {
    const CutoffTable cutoffs;
    DemographicRecord rec = child_record();
    // BMI = 30 / 1.3^2 = 17.75 -> normal for child thresholds (14, 18, 22)
    CHECK(acbmi_category(rec, cutoffs) == BmiCategory::normal);

    rec.height_cm.reset();
    CHECK(acbmi_category(rec, cutoffs) == BmiCategory::missing);
    rec = child_record();
    rec.age_group = AgeGroup::missing;
    CHECK(acbmi_category(rec, cutoffs) == BmiCategory::missing);

    // exactly at t2 -> upper category
    rec = child_record();
    rec.height_cm = 100.0;
    rec.weight_kg = 18.0; // BMI exactly 18
    CHECK(acbmi_category(rec, cutoffs) == BmiCategory::overweight);

    CutoffTable bad;
    bad.thresholds[2] = {18.0, 14.0, 22.0};
    CHECK_THROWS_AS(acbmi_category(rec, bad), PcgError);
}

TEST_CASE("demographic encoding layout") {
    const CutoffTable cutoffs;
    // male, not pregnant, child, normal acBMI
    CHECK(encode_demographics(child_record(), cutoffs) ==
          std::vector<double>{1, 0, 0, 0, 1, 0, 0, 1, 0, 0});

    DemographicRecord missing; // everything missing
    CHECK(encode_demographics(missing, cutoffs) ==
          std::vector<double>{0.5, 0, 0, 0, 0, 0, 0, 0, 0, 0});

    DemographicRecord preg;
    preg.sex = Sex::female;
    preg.pregnant = Tristate::yes;
    preg.age_group = AgeGroup::adolescent;
    const auto v = encode_demographics(preg, cutoffs);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == 1.0);
    CHECK(v[5] == 1.0); // adolescent one-hot slot
    CHECK(v[6] + v[7] + v[8] + v[9] == 0.0);

    // totality: always 10 entries in [0, 1]
    for (double entry : v) {
        CHECK(entry >= 0.0);
        CHECK(entry <= 1.0);
    }
    CHECK(v.size() == 10);
}

TEST_CASE("fusion: audio first, +10 dims, zero demo passthrough") {
    std::vector<double> audio(128, 0.5);
    const auto fused = fuse(audio, std::vector<double>(10, 0.0));
    REQUIRE(fused.size() == 138);
    for (int i = 0; i < 128; ++i) CHECK(fused[i] == 0.5);
    for (int i = 128; i < 138; ++i) CHECK(fused[i] == 0.0);
    CHECK_THROWS_AS(fuse(audio, std::vector<double>(9, 0.0)), PcgError);

    for (int d : {16, 64, 256}) {
        std::vector<double> a(d, 1.0);
        CHECK(fuse(a, std::vector<double>(10, 0.0)).size() == static_cast<std::size_t>(d + 10));
    }
}

TEST_CASE("head training: schedule, loss decrease, single-class rejection") {
    auto [X, y] = separable(64, 3);
    HeadConfig cfg;
    cfg.hidden = 32;
    cfg.seed = 3;
    TrainLog log;
    HeadModel model = train_head(X, y, cfg, false, &log);
    REQUIRE(log.epoch_loss.size() == 20);
    REQUIRE(log.epoch_lr.size() == 20);
    CHECK(log.epoch_lr[0] == doctest::Approx(1e-4));
    CHECK(log.epoch_lr[5] == doctest::Approx(1e-5));  // epoch 6
    CHECK(log.epoch_lr[10] == doctest::Approx(1e-6)); // epoch 11
    CHECK(log.epoch_loss.back() < log.epoch_loss.front());

    // exactly two hidden layers of the configured width
    REQUIRE(model.mlp.layers.size() == 3);
    CHECK(model.mlp.layers[0].out == 32);
    CHECK(model.mlp.layers[1].out == 32);
    CHECK(model.mlp.layers[2].out == 2);

    std::vector<int> ones(X.size(), 1);
    CHECK_THROWS_AS(train_head(X, ones, cfg, false), PcgError);

    SUBCASE("zero epochs leaves the model at initialization") {
        HeadConfig zero = cfg;
        zero.epochs = 0;
        TrainLog no_log;
        train_head(X, y, zero, false, &no_log);
        CHECK(no_log.epoch_loss.empty());
    }

    SUBCASE("inference is dropout-free and repeatable") {
        const auto a = predict_outcome(model, X[0], std::nullopt);
        const auto b = predict_outcome(model, X[0], std::nullopt);
        CHECK(a.first == b.first);
        CHECK(a.second == b.second);
    }

    SUBCASE("head checkpoint round trip") {
        const std::string path = (fs::temp_directory_path() / "head.json").string();
        save_head(model, path);
        HeadModel back = load_head(path);
        CHECK(back.in_dim == model.in_dim);
        CHECK(back.multimodal == model.multimodal);
        for (int i = 0; i < 10; ++i)
            CHECK(predict_outcome(back, X[i], std::nullopt).first ==
                  doctest::Approx(predict_outcome(model, X[i], std::nullopt).first)
                      .epsilon(1e-6));
        fs::remove(path);
        fs::remove((fs::temp_directory_path() / "head.bin").string());
    }
}

TEST_CASE("prediction semantics: softmax, tie to abnormal, modality checks") {
    // hand-built head: identity-free, zero weights -> logits (0,0) -> tie
    Rng rng(5);
    HeadModel model;
    model.in_dim = 4;
    model.multimodal = false;
    model.mlp.init({4, 8, 8, 2}, 0.0, rng, "h");
    std::vector<nn::Param*> params;
    model.mlp.collect(params);
    for (auto* p : params) std::fill(p->w.begin(), p->w.end(), 0.0);
    const auto [p_tie, label_tie] = predict_outcome(model, {1.0, 2.0, 3.0, 4.0}, std::nullopt);
    CHECK(p_tie == doctest::Approx(0.5));
    CHECK(label_tie == 1); // tie -> abnormal

    // saturated logits via the output bias
    params.back()->w = {-10.0, 10.0}; // output bias is the last param
    const auto [p_hi, label_hi] = predict_outcome(model, {0.0, 0.0, 0.0, 0.0}, std::nullopt);
    CHECK(p_hi > 0.999);
    CHECK(label_hi == 1);

    // unimodal + demographics supplied -> ignored
    const auto with_demo =
        predict_outcome(model, {0.0, 0.0, 0.0, 0.0}, std::vector<double>(10, 1.0));
    CHECK(with_demo.first == p_hi);

    // multimodal without demographics -> ModalityMismatch
    model.multimodal = true;
    model.in_dim = 14;
    CHECK_THROWS_AS(predict_outcome(model, {0.0, 0.0, 0.0, 0.0}, std::nullopt), PcgError);
}

TEST_CASE("head gradient check through the fusion concatenation") {
    Rng rng(6);
    HeadModel model;
    model.in_dim = 6 + 10;
    model.multimodal = true;
    model.mlp.init({16, 8, 8, 2}, 0.0, rng, "h");

    std::vector<double> audio(6);
    for (auto& v : audio) v = rng.gaussian();
    const CutoffTable cutoffs;
    const auto demo = encode_demographics(child_record(), cutoffs);
    const auto x = fuse(audio, demo);

    Rng dummy(0);
    std::vector<double> d;
    std::vector<nn::Param*> params;
    model.mlp.collect(params);
    for (auto* p : params) p->zero_grad();
    cross_entropy_loss(model.mlp.forward(x, false, dummy), 1, d);
    model.mlp.backward(d);

    const double h = 1e-4;
    for (auto* p : params)
        for (std::size_t i = 0; i < p->w.size(); i += std::max<std::size_t>(1, p->w.size() / 6)) {
            std::vector<double> tmp;
            const double keep = p->w[i];
            p->w[i] = keep + h;
            const double lp = cross_entropy_loss(model.mlp.forward(x, false, dummy), 1, tmp);
            p->w[i] = keep - h;
            const double lm = cross_entropy_loss(model.mlp.forward(x, false, dummy), 1, tmp);
            p->w[i] = keep;
            const double fd = (lp - lm) / (2 * h);
            const double scale = std::max({std::abs(fd), std::abs(p->g[i]), 1e-6});
            CHECK(std::abs(p->g[i] - fd) / scale < 1e-3);
        }
}
