#pragma once

#include "pcg/audio.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pcg {

struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;
};

struct FeatureMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
};

using Interval = std::pair<double, double>; // (start_s, end_s)

struct Segmentation {
    std::vector<Interval> s1_intervals;
    std::vector<Interval> s2_intervals;
    std::vector<Interval> systole_intervals; // S1 peak -> S2 peak
    std::vector<Interval> diastole_intervals; // S2 peak -> next S1 peak
    std::vector<double> peak_times_s;        // all accepted envelope peaks
    bool degenerate = false;                  // pairing unreliable
};

// exp(lowpass8Hz(log(|analytic(x)| + 1e-10))); requires 1 kHz input.
std::vector<double> homomorphic_envelope(const PcgRecording& rec);

// Peak picking (min distance 200 ms, prominence >= 0.25 * median peak
// height) and alternating S1/S2 pairing; the shorter inter-peak gap is
// systole. Throws TooFewPeaks below 4 peaks.
Segmentation segment_envelope(const std::vector<double>& env, double rate_hz);

// mean(env over S2) / (0.5*(mean over systole) + 0.5*(mean over diastole));
// 0 when the denominator is degenerate.
double s2_quality_factor(const std::vector<double>& env, const Segmentation& seg);
double s1_quality_factor(const std::vector<double>& env, const Segmentation& seg);

// Fixed 72-feature schema; see feature_schema() for the name order.
// Requires 1 kHz and >= 6 s. Non-finite intermediates become 0 and raise
// the degenerate flag feature.
FeatureVector extract_features(const PcgRecording& rec);

const std::vector<std::string>& feature_schema();

// Feature extraction over a set of recordings; OpenMP-parallel across
// recordings when pcg::set_num_threads(>1), bit-identical to serial.
FeatureMatrix extract_feature_matrix(const std::vector<PcgRecording>& recs);

void write_feature_matrix(const FeatureMatrix& m, const std::string& path);
FeatureMatrix read_feature_matrix(const std::string& path);

} // namespace pcg
