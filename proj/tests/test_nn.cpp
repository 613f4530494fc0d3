#include "pcg/error.hpp"
#include "pcg/nn.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace pcg;
using namespace pcg::nn;
namespace fs = std::filesystem;

namespace {

// loss = sum(c_i * out_i) for fixed random c: gradient flows are generic
std::vector<double> random_cotangent(std::size_t n, Rng& rng) {
    std::vector<double> c(n);
    for (auto& v : c) v = rng.gaussian();
    return c;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max({std::abs(got), std::abs(want), 1e-8});
}

} // namespace

TEST_CASE("conv2d gradients match central differences") {
    Rng rng(1);
    Conv2d conv;
    conv.init(2, 3, rng, "c");
    Tensor3 x(2, 8, 6);
    for (auto& v : x.v) v = rng.gaussian();

    Tensor3 y = conv.forward(x);
    const auto c = random_cotangent(y.v.size(), rng);
    conv.weight.zero_grad();
    conv.bias.zero_grad();
    Tensor3 dy = y;
    dy.v = c;
    const Tensor3 dx = conv.backward(dy);

    const double h = 1e-4;
    auto loss_at = [&]() { return dot(conv.forward(x).v, c); };
    for (std::size_t i = 0; i < conv.weight.w.size(); i += 7) {
        const double keep = conv.weight.w[i];
        conv.weight.w[i] = keep + h;
        const double lp = loss_at();
        conv.weight.w[i] = keep - h;
        const double lm = loss_at();
        conv.weight.w[i] = keep;
        CHECK(rel_err(conv.weight.g[i], (lp - lm) / (2 * h)) < 1e-3);
    }
    for (std::size_t i = 0; i < x.v.size(); i += 5) {
        const double keep = x.v[i];
        x.v[i] = keep + h;
        const double lp = loss_at();
        x.v[i] = keep - h;
        const double lm = loss_at();
        x.v[i] = keep;
        CHECK(rel_err(dx.v[i], (lp - lm) / (2 * h)) < 1e-3);
    }
}

TEST_CASE("conv2d parallel forward equals serial reference") {
    Rng rng(2);
    Conv2d conv;
    conv.init(3, 8, rng, "c");
    Tensor3 x(3, 16, 12);
    for (auto& v : x.v) v = rng.gaussian();
    CHECK(conv.forward(x).v == conv.forward_serial(x).v);
}

TEST_CASE("linear gradients match central differences") {
    Rng rng(3);
    Linear lin;
    lin.init(7, 4, rng, "l");
    std::vector<double> x(7);
    for (auto& v : x) v = rng.gaussian();

    const auto y = lin.forward(x);
    const auto c = random_cotangent(y.size(), rng);
    lin.weight.zero_grad();
    lin.bias.zero_grad();
    const auto dx = lin.backward(c);

    const double h = 1e-4;
    auto loss_at = [&]() { return dot(lin.forward(x), c); };
    for (std::size_t i = 0; i < lin.weight.w.size(); ++i) {
        const double keep = lin.weight.w[i];
        lin.weight.w[i] = keep + h;
        const double lp = loss_at();
        lin.weight.w[i] = keep - h;
        const double lm = loss_at();
        lin.weight.w[i] = keep;
        CHECK(rel_err(lin.weight.g[i], (lp - lm) / (2 * h)) < 1e-3);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double lp = loss_at();
        x[i] = keep - h;
        const double lm = loss_at();
        x[i] = keep;
        CHECK(rel_err(dx[i], (lp - lm) / (2 * h)) < 1e-3);
    }
}

TEST_CASE("relu gradient routes only positive activations") {
    Rng rng(4);
    Relu relu;
    std::vector<double> x = {-1.0, 0.5, -0.2, 2.0, 0.0};
    relu.forward(x);
    const std::vector<double> dy = {1.0, 1.0, 1.0, 1.0, 1.0};
    const auto dx = relu.backward(dy);
    CHECK(dx == std::vector<double>{0.0, 1.0, 0.0, 1.0, 0.0});
}

TEST_CASE("L2 normalization gradient matches central differences") {
    Rng rng(5);
    L2Normalize norm;
    std::vector<double> x(6);
    for (auto& v : x) v = rng.gaussian();
    const auto y = norm.forward(x);
    const auto c = random_cotangent(y.size(), rng);
    const auto dx = norm.backward(c);

    const double h = 1e-4;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double lp = dot(norm.forward(x), c);
        x[i] = keep - h;
        const double lm = dot(norm.forward(x), c);
        x[i] = keep;
        CHECK(rel_err(dx[i], (lp - lm) / (2 * h)) < 1e-3);
    }

    // zero vector maps to zero vector and zero gradient
    std::vector<double> zero(6, 0.0);
    const auto z = norm.forward(zero);
    for (double v : z) CHECK(v == 0.0);
    for (double v : norm.backward(c)) CHECK(v == 0.0);
}

TEST_CASE("mean+max pooling gradient matches central differences") {
    Rng rng(6);
    MeanMaxTimePool pool;
    Tensor3 x(2, 5, 3);
    for (auto& v : x.v) v = rng.gaussian();
    const auto y = pool.forward(x);
    REQUIRE(y.size() == 2 * 2 * 3);
    const auto c = random_cotangent(y.size(), rng);
    const Tensor3 dx = pool.backward(c);

    const double h = 1e-4;
    for (std::size_t i = 0; i < x.v.size(); ++i) {
        const double keep = x.v[i];
        x.v[i] = keep + h;
        const double lp = dot(pool.forward(x), c);
        x.v[i] = keep - h;
        const double lm = dot(pool.forward(x), c);
        x.v[i] = keep;
        CHECK(rel_err(dx.v[i], (lp - lm) / (2 * h)) < 2e-3);
    }
}

TEST_CASE("mlp gradient (eval mode) matches central differences") {
    Rng rng(7);
    Mlp mlp;
    mlp.init({5, 8, 3}, 0.0, rng, "m");
    std::vector<double> x(5);
    for (auto& v : x) v = rng.gaussian();
    Rng dummy(0);
    const auto y = mlp.forward(x, false, dummy);
    const auto c = random_cotangent(y.size(), rng);
    std::vector<Param*> params;
    mlp.collect(params);
    for (auto* p : params) p->zero_grad();
    mlp.backward(c);

    const double h = 1e-4;
    for (auto* p : params)
        for (std::size_t i = 0; i < p->w.size(); i += 3) {
            const double keep = p->w[i];
            p->w[i] = keep + h;
            const double lp = dot(mlp.forward(x, false, dummy), c);
            p->w[i] = keep - h;
            const double lm = dot(mlp.forward(x, false, dummy), c);
            p->w[i] = keep;
            CHECK(rel_err(p->g[i], (lp - lm) / (2 * h)) < 1e-3);
        }
}

TEST_CASE("cross entropy: softmax normalization and gradient") {
    std::vector<double> logits = {0.3, -1.2};
    const auto p = softmax(logits);
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> d;
    const double loss = cross_entropy_loss(logits, 1, d);
    CHECK(loss == doctest::Approx(-std::log(p[1])).epsilon(1e-12));

    const double h = 1e-5;
    for (int i = 0; i < 2; ++i) {
        std::vector<double> lp = logits, lm = logits, tmp;
        lp[i] += h;
        lm[i] -= h;
        const double fd =
            (cross_entropy_loss(lp, 1, tmp) - cross_entropy_loss(lm, 1, tmp)) / (2 * h);
        CHECK(rel_err(d[i], fd) < 1e-4);
    }
}

TEST_CASE("dropout is inverted and off at inference") {
    Rng rng(8);
    Dropout drop;
    drop.rate = 0.5;
    std::vector<double> x(10000, 1.0);
    const auto eval = drop.forward(x, false, rng);
    CHECK(eval == x);
    const auto train = drop.forward(x, true, rng);
    double mean = 0.0;
    for (double v : train) mean += v;
    mean /= train.size();
    CHECK(mean == doctest::Approx(1.0).epsilon(0.05));
    for (double v : train) CHECK((v == 0.0 || v == 2.0));
}

TEST_CASE("adam takes a descent step on a quadratic") {
    Param p;
    p.init(1, "p");
    p.w[0] = 3.0;
    Adam adam;
    adam.lr = 0.1;
    for (int i = 0; i < 200; ++i) {
        p.zero_grad();
        p.g[0] = 2.0 * p.w[0]; // d/dw w^2
        adam.step({&p});
    }
    CHECK(std::abs(p.w[0]) < 0.5);
}

TEST_CASE("checkpoint round trip and shape mismatch") {
    Rng rng(9);
    Linear a;
    a.init(4, 3, rng, "layer");
    const std::string jp = (fs::temp_directory_path() / "ck.json").string();
    const std::string bp = (fs::temp_directory_path() / "ck.bin").string();
    save_checkpoint(jp, bp, {&a.weight, &a.bias}, {{3, 4}, {3}}, R"({"note":1})");

    Linear b;
    b.init(4, 3, rng, "layer");
    const std::string cfg = load_checkpoint(jp, {&b.weight, &b.bias});
    CHECK(cfg.find("note") != std::string::npos);
    for (std::size_t i = 0; i < a.weight.w.size(); ++i)
        CHECK(b.weight.w[i] == doctest::Approx(a.weight.w[i]).epsilon(1e-6));

    Linear wrong;
    wrong.init(5, 3, rng, "layer");
    CHECK_THROWS_AS(load_checkpoint(jp, {&wrong.weight, &wrong.bias}), PcgError);
    fs::remove(jp);
    fs::remove(bp);
}
