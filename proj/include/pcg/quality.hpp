#pragma once

#include "pcg/ensemble.hpp"
#include "pcg/manifest.hpp"
#include "pcg/mutual_info.hpp"

#include <cstdint>
#include <string>

namespace pcg {

enum class LabelSource { annotated, pseudo };

struct QualityLabel {
    int value = 0; // 0 = unacceptable, 1 = acceptable
    LabelSource source = LabelSource::annotated;
};

// score 1..3 -> unacceptable, 4..5 -> acceptable; else OutOfRange
QualityLabel map_score(int score);

struct QualityConfig {
    double keep_fraction = 0.2;
    int mi_bins = 10;
    double decision_threshold = 0.5; // p_acceptable >= threshold -> keep; tie rejects
    SvmParams svm;
    ForestParams rf;
    BoostParams gb;
    std::uint64_t seed = 0;
};

struct QualityModel {
    SelectionModel selection;
    EnsembleModel ensemble;
    int operating_rate_hz = 1000;
    double decision_threshold = 0.5;
    std::string feature_schema_id = "pcg-quality-72-v1";
};

// Per-class shuffled partition; per-class test count = round(f * class size).
std::pair<Manifest, Manifest> stratified_split(const Manifest& manifest, double test_fraction,
                                               std::uint64_t seed);

// resample(1 kHz) -> pad(6 s) -> features -> MI selection -> SVM+RF+GB -> voting
QualityModel train_quality(const Manifest& train, const QualityConfig& config);

// Any input rate; resampled internally to the 1 kHz operating rate.
// label 1 iff p_acceptable > threshold (exact tie -> unacceptable).
std::pair<double, int> score_quality(const QualityModel& model, const PcgRecording& rec);

struct GateReport {
    std::size_t total = 0, kept = 0, removed = 0;
    double removed_fraction = 0.0;
    std::size_t kept_normal = 0, kept_abnormal = 0, removed_normal = 0, removed_abnormal = 0;
};

struct GateResult {
    Manifest kept;
    Manifest removed;
    GateReport report;
};

GateResult gate_manifest(const QualityModel& model, const Manifest& manifest);

std::string gate_report_json(const GateReport& r);

void save_quality_model(const QualityModel& model, const std::string& path);
QualityModel load_quality_model(const std::string& path);

} // namespace pcg
