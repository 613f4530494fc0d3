// Kernel benchmark: OpenMP paths vs their serial references. Each section
// checks bit-identical outputs before reporting timings.

#include "pcg/features.hpp"
#include "pcg/forest.hpp"
#include "pcg/mutual_info.hpp"
#include "pcg/nn.hpp"
#include "pcg/rng.hpp"
#include "pcg/synth.hpp"
#include "pcg/threading.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace pcg;

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

bool same(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void bench_conv() {
    Rng rng(7);
    nn::Conv2d conv;
    conv.init(16, 64, rng, "bench");
    nn::Tensor3 x(16, 96, 64);
    for (auto& v : x.v) v = rng.gaussian();

    const double t0 = now_s();
    nn::Tensor3 ys;
    for (int i = 0; i < 20; ++i) ys = conv.forward_serial(x);
    const double t1 = now_s();

    set_num_threads(max_threads());
    nn::Tensor3 yp;
    const double t2 = now_s();
    for (int i = 0; i < 20; ++i) yp = conv.forward(x);
    const double t3 = now_s();
    set_num_threads(1);

    std::printf("conv2d 16->64 on 96x64   serial %.3fs  parallel(%d) %.3fs  identical=%s\n",
                t1 - t0, max_threads(), t3 - t2, same(ys.v, yp.v) ? "yes" : "NO");
}

std::vector<PcgRecording> bench_corpus(int n) {
    std::vector<PcgRecording> recs;
    for (int i = 0; i < n; ++i) {
        SynthSpec spec;
        spec.seed = 1000 + i;
        spec.heart_rate_bpm = 60.0 + i % 40;
        spec.duration_s = 8.0;
        spec.snr_db = 12.0;
        recs.push_back(synthesize(spec));
    }
    return recs;
}

void bench_features() {
    const auto recs = bench_corpus(24);

    set_num_threads(1);
    const double t0 = now_s();
    const FeatureMatrix serial = extract_feature_matrix(recs);
    const double t1 = now_s();

    set_num_threads(max_threads());
    const double t2 = now_s();
    const FeatureMatrix parallel = extract_feature_matrix(recs);
    const double t3 = now_s();
    set_num_threads(1);

    bool identical = serial.rows.size() == parallel.rows.size();
    for (std::size_t i = 0; identical && i < serial.rows.size(); ++i)
        identical = same(serial.rows[i], parallel.rows[i]);
    std::printf("features x%zu recordings  serial %.3fs  parallel(%d) %.3fs  identical=%s\n",
                recs.size(), t1 - t0, max_threads(), t3 - t2, identical ? "yes" : "NO");
}

void bench_selection() {
    Rng rng(11);
    FeatureMatrix X;
    const int n = 2000, d = 400;
    for (int j = 0; j < d; ++j) X.names.push_back("f" + std::to_string(j));
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(d);
        for (auto& v : row) v = rng.gaussian();
        y.push_back(row[0] > 0 ? 1 : 0);
        X.rows.push_back(std::move(row));
    }

    set_num_threads(1);
    const double t0 = now_s();
    const SelectionModel serial = fit_selection(X, y, 0.2, 10);
    const double t1 = now_s();

    set_num_threads(max_threads());
    const double t2 = now_s();
    const SelectionModel parallel = fit_selection(X, y, 0.2, 10);
    const double t3 = now_s();
    set_num_threads(1);

    const bool identical = same(serial.mi_scores, parallel.mi_scores) &&
                           serial.ranked_names == parallel.ranked_names;
    std::printf("MI selection %dx%d      serial %.3fs  parallel(%d) %.3fs  identical=%s\n", n, d,
                t1 - t0, max_threads(), t3 - t2, identical ? "yes" : "NO");
}

void bench_forest() {
    Rng rng(13);
    const int n = 600, d = 15;
    DataMatrix X;
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(d);
        for (auto& v : row) v = rng.gaussian();
        y.push_back(row[0] + row[1] > 0 ? 1 : 0);
        X.push_back(std::move(row));
    }
    ForestParams params;
    params.n_trees = 200;

    set_num_threads(1);
    RandomForest serial;
    const double t0 = now_s();
    serial.fit(X, y, params, 99);
    const double t1 = now_s();

    set_num_threads(max_threads());
    RandomForest parallel;
    const double t2 = now_s();
    parallel.fit(X, y, params, 99);
    const double t3 = now_s();
    set_num_threads(1);

    bool identical = true;
    for (int i = 0; i < 50; ++i) {
        std::vector<double> row(d);
        for (auto& v : row) v = rng.gaussian();
        identical = identical &&
                    serial.predict_proba(row).second == parallel.predict_proba(row).second;
    }
    std::printf("forest 200 trees n=%d   serial %.3fs  parallel(%d) %.3fs  identical=%s\n", n,
                t1 - t0, max_threads(), t3 - t2, identical ? "yes" : "NO");
}

} // namespace

int main() {
    std::printf("kernel benchmark (max threads: %d)\n", max_threads());
    bench_conv();
    bench_features();
    bench_selection();
    bench_forest();
    return 0;
}
