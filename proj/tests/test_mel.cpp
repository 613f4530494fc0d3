#include "pcg/mel.hpp"
#include "pcg/error.hpp"
#include "pcg/synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace pcg;

namespace {

constexpr double kPi = 3.14159265358979323846;

PcgRecording sine(double freq, double dur_s, int rate = 1000) {
    PcgRecording rec;
    rec.sample_rate_hz = rate;
    const std::size_t n = static_cast<std::size_t>(dur_s * rate);
    for (std::size_t i = 0; i < n; ++i)
        rec.samples.push_back(0.5 * std::sin(2.0 * kPi * freq * i / rate));
    return rec;
}

MelSpectrogram random_spec(std::uint64_t seed) {
    Rng rng(seed);
    MelSpectrogram spec;
    for (auto& v : spec.grid) v = rng.gaussian();
    return standardize(spec);
}

double mean_of(const MelSpectrogram& s) {
    double m = 0.0;
    for (double v : s.grid) m += v;
    return m / s.grid.size();
}

double std_of(const MelSpectrogram& s) {
    const double m = mean_of(s);
    double var = 0.0;
    for (double v : s.grid) var += (v - m) * (v - m);
    return std::sqrt(var / s.grid.size());
}

} // namespace

TEST_CASE("log_mel shape and standardization") {
    Rng rng(1);
    MelConfig cfg;
    for (double dur : {0.5, 2.0, 10.0}) {
        const MelSpectrogram spec = log_mel(sine(120.0, dur), cfg, rng);
        CHECK(spec.grid.size() == 96 * 64);
        CHECK(std::abs(mean_of(spec)) < 1e-6);
        CHECK(std_of(spec) == doctest::Approx(1.0).epsilon(1e-6));
        for (double v : spec.grid) CHECK(std::isfinite(v));
    }
}

TEST_CASE("silence maps to all zeros through the std floor") {
    Rng rng(2);
    PcgRecording rec;
    rec.sample_rate_hz = 1000;
    rec.samples.assign(2000, 0.0);
    const MelSpectrogram spec = log_mel(rec, MelConfig{}, rng);
    for (double v : spec.grid) CHECK(v == 0.0);
}

TEST_CASE("tone energy concentrates near the right mel bin") {
    Rng rng(3);
    const MelSpectrogram spec = log_mel(sine(300.0, 4.0), MelConfig{}, rng);
    // compare mean energy around the expected region vs a far region
    auto band_mean = [&](int lo, int hi) {
        double s = 0.0;
        int n = 0;
        for (int t = 0; t < kMelFrames; ++t)
            for (int m = lo; m < hi; ++m) {
                s += spec.at(t, m);
                ++n;
            }
        return s / n;
    };
    // 300 Hz sits in the upper half of a 20-450 Hz mel axis
    CHECK(band_mean(40, 60) > band_mean(0, 20));
}

TEST_CASE("center crop is deterministic, random crop is seed-driven") {
    const PcgRecording rec = sine(150.0, 8.0);
    MelConfig center;
    center.random_crop = false;
    Rng r1(10), r2(20);
    CHECK(log_mel(rec, center, r1).grid == log_mel(rec, center, r2).grid);

    MelConfig random;
    random.random_crop = true;
    Rng r3(10), r4(10);
    CHECK(log_mel(rec, random, r3).grid == log_mel(rec, random, r4).grid);
}

TEST_CASE("pitch_shift roll semantics") {
    MelSpectrogram spec = random_spec(5);
    CHECK(pitch_shift(spec, 0).grid == spec.grid);
    CHECK_THROWS_AS(pitch_shift(spec, 9), PcgError);

    // single-hot bin moves by the shift
    MelSpectrogram hot;
    for (auto& v : hot.grid) v = -1.0;
    for (int t = 0; t < kMelFrames; ++t) hot.at(t, 10) = 3.0;
    const MelSpectrogram shifted = pitch_shift(hot, 2);
    for (int t = 0; t < kMelFrames; ++t) {
        CHECK(shifted.at(t, 12) == 3.0);
        CHECK(shifted.at(t, 10) == -1.0);
        CHECK(shifted.at(t, 0) == -1.0); // vacated bins take the minimum
    }
}

TEST_CASE("time_stretch identity, range check, constant invariance") {
    MelSpectrogram spec = random_spec(6);
    CHECK(time_stretch(spec, 1.0).grid == spec.grid);
    CHECK_THROWS_AS(time_stretch(spec, 2.0), PcgError);
    CHECK_THROWS_AS(time_stretch(spec, 0.5), PcgError);

    MelSpectrogram flat;
    for (int t = 0; t < kMelFrames; ++t)
        for (int m = 0; m < kMelBins; ++m) flat.at(t, m) = std::sin(0.3 * m);
    for (double f : {0.6, 0.8, 1.2, 1.5}) {
        const MelSpectrogram out = time_stretch(flat, f);
        for (std::size_t i = 0; i < out.grid.size(); ++i)
            CHECK(out.grid[i] == doctest::Approx(flat.grid[i]).epsilon(1e-12));
    }
}

TEST_CASE("make_views: degenerate ranges reproduce the input") {
    const MelSpectrogram spec = random_spec(7);
    AugmentRanges ranges;
    ranges.max_pitch_shift = 0;
    ranges.stretch_lo = ranges.stretch_hi = 1.0;
    Rng rng(11);
    const auto [v1, v2] = make_views(spec, ranges, rng);
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
        CHECK(v1.grid[i] == doctest::Approx(spec.grid[i]).epsilon(1e-9));
        CHECK(v2.grid[i] == doctest::Approx(spec.grid[i]).epsilon(1e-9));
    }
}

TEST_CASE("make_views is reproducible and views are re-standardized") {
    const MelSpectrogram spec = random_spec(8);
    AugmentRanges ranges;
    Rng a(13), b(13);
    const auto [a1, a2] = make_views(spec, ranges, a);
    const auto [b1, b2] = make_views(spec, ranges, b);
    CHECK(a1.grid == b1.grid);
    CHECK(a2.grid == b2.grid);
    CHECK(std::abs(mean_of(a1)) < 1e-9);
    CHECK(std_of(a1) == doctest::Approx(1.0).epsilon(1e-9));
    // distinct draws give distinct views with overwhelming probability
    CHECK(a1.grid != a2.grid);
}

TEST_CASE("standardization is idempotent") {
    MelSpectrogram spec = random_spec(9);
    for (auto& v : spec.grid) v = 3.0 * v + 7.0;
    const MelSpectrogram once = standardize(spec);
    const MelSpectrogram twice = standardize(once);
    for (std::size_t i = 0; i < once.grid.size(); ++i)
        CHECK(twice.grid[i] == doctest::Approx(once.grid[i]).epsilon(1e-9));
}
