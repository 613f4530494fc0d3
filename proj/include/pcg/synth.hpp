#pragma once

#include "pcg/audio.hpp"
#include "pcg/manifest.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <utility>

namespace pcg {

struct SynthSpec {
    double heart_rate_bpm = 60.0; // [40, 200]
    double duration_s = 10.0;
    int sample_rate_hz = 1000;
    double s1_freq_hz = 60.0;
    double s2_freq_hz = 90.0;
    double s2_amp_ratio = 0.8;     // S2 peak / S1 peak
    double systole_fraction = 0.35; // in (0, 0.5)
    bool murmur = false;
    std::pair<double, double> murmur_band_hz = {150.0, 400.0};
    double murmur_amp = 0.15;
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
};

// Deterministic synthetic PCG: Gaussian-windowed S1/S2 tones per cycle
// (sigma 25 ms), optional band-limited systolic murmur, white noise scaled
// to hit snr_db exactly against the noiseless reference.
PcgRecording synthesize(const SynthSpec& spec);

// SNR thresholds (dB) for quality scores 5..2; below the last -> 1.
struct QualityRule {
    double t5 = 15.0, t4 = 10.0, t3 = 5.0, t2 = 0.0;
    int score(double snr_db) const {
        if (snr_db >= t5) return 5;
        if (snr_db >= t4) return 4;
        if (snr_db >= t3) return 3;
        if (snr_db >= t2) return 2;
        return 1;
    }
};

struct CorpusOptions {
    int n = 100;
    std::string out_dir;
    std::uint64_t seed = 0;
    QualityRule quality_rule;
    double snr_lo_db = -10.0;
    double snr_hi_db = 25.0;
    int sample_rate_hz = 1000;
    double duration_s = 8.0;
};

// n recordings with randomized heart rate / morphology / SNR; murmur flag
// alternates so a corpus of even n is label-balanced. Writes WAVs plus
// manifest.csv into out_dir; returns the manifest.
Manifest make_corpus(const CorpusOptions& opt);

} // namespace pcg
