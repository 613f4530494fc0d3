#include "pcg/quality.hpp"
#include "pcg/error.hpp"
#include "pcg/features.hpp"
#include "pcg/rng.hpp"
#include "pcg/threading.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pcg {

using nlohmann::json;

QualityLabel map_score(int score) {
    if (score < 1 || score > 5)
        throw PcgError("OutOfRange", "quality score " + std::to_string(score));
    QualityLabel label;
    label.value = score >= 4 ? 1 : 0;
    label.source = LabelSource::annotated;
    return label;
}

std::pair<Manifest, Manifest> stratified_split(const Manifest& manifest, double test_fraction,
                                               std::uint64_t seed) {
    std::vector<std::size_t> cls0, cls1;
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        const auto& row = manifest.rows[i];
        if (!row.quality_score) throw PcgError("BadScore", row.path + ": unlabeled row");
        (map_score(*row.quality_score).value ? cls1 : cls0).push_back(i);
    }
    if (cls0.size() < 2 || cls1.size() < 2)
        throw PcgError("DegenerateClass", "each class needs at least 2 rows");

    Rng rng(seed);
    Manifest train, test;
    for (auto* cls : {&cls0, &cls1}) {
        auto& idx = *cls;
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
        const std::size_t n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < idx.size(); ++k)
            (k < n_test ? test : train).rows.push_back(manifest.rows[idx[k]]);
    }
    return {std::move(train), std::move(test)};
}

namespace {

PcgRecording prepare(const PcgRecording& raw) {
    return pad_by_replication(resample(raw, 1000), 6.0);
}

FeatureMatrix load_features(const Manifest& manifest) {
    std::vector<PcgRecording> recs(manifest.rows.size());
    const int nt = num_threads();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
    for (long i = 0; i < static_cast<long>(manifest.rows.size()); ++i)
        recs[i] = prepare(load_wav(manifest.rows[i].path));
    (void)nt;
    return extract_feature_matrix(recs);
}

} // namespace

QualityModel train_quality(const Manifest& train, const QualityConfig& config) {
    std::vector<int> labels;
    for (const auto& row : train.rows) {
        if (!row.quality_score) throw PcgError("BadScore", row.path + ": unlabeled row");
        labels.push_back(map_score(*row.quality_score).value);
    }
    const bool has0 = std::any_of(labels.begin(), labels.end(), [](int v) { return v == 0; });
    const bool has1 = std::any_of(labels.begin(), labels.end(), [](int v) { return v == 1; });
    if (!has0 || !has1) throw PcgError("DegenerateClass", "training set has a single class");

    FeatureMatrix X = load_features(train);

    QualityModel model;
    model.decision_threshold = config.decision_threshold;
    model.selection = fit_selection(X, labels, config.keep_fraction, config.mi_bins);
    FeatureMatrix Xs = apply_selection(model.selection, X);

    SvmModel svm;
    svm.fit(Xs.rows, labels, config.svm);
    RandomForest rf;
    rf.fit(Xs.rows, labels, config.rf, config.seed ^ 0xf0f0f0f0ull);
    GradientBoosting gb;
    gb.fit(Xs.rows, labels, config.gb, config.seed ^ 0x0e0e0e0eull);
    model.ensemble.add_svm(std::move(svm));
    model.ensemble.add_rf(std::move(rf));
    model.ensemble.add_gb(std::move(gb));
    return model;
}

std::pair<double, int> score_quality(const QualityModel& model, const PcgRecording& rec) {
    const PcgRecording prepared = prepare(rec);
    FeatureVector fv = extract_features(prepared);
    FeatureMatrix X;
    X.names = fv.names;
    X.rows.push_back(fv.values);
    const FeatureMatrix Xs = apply_selection(model.selection, X);
    const auto [p0, p1] = model.ensemble.predict_proba(Xs.rows[0]);
    (void)p0;
    const int label = p1 > model.decision_threshold ? 1 : 0; // tie -> unacceptable
    return {p1, label};
}

GateResult gate_manifest(const QualityModel& model, const Manifest& manifest) {
    GateResult result;
    result.report.total = manifest.rows.size();

    std::vector<int> labels(manifest.rows.size(), 0);
    const int nt = num_threads();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
    for (long i = 0; i < static_cast<long>(manifest.rows.size()); ++i)
        labels[i] = score_quality(model, load_wav(manifest.rows[i].path)).second;
    (void)nt;

    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        const auto& row = manifest.rows[i];
        const bool abnormal = row.outcome_label && *row.outcome_label == Outcome::abnormal;
        if (labels[i]) {
            result.kept.rows.push_back(row);
            ++(abnormal ? result.report.kept_abnormal : result.report.kept_normal);
        } else {
            result.removed.rows.push_back(row);
            ++(abnormal ? result.report.removed_abnormal : result.report.removed_normal);
        }
    }
    result.report.kept = result.kept.rows.size();
    result.report.removed = result.removed.rows.size();
    result.report.removed_fraction =
        result.report.total
            ? static_cast<double>(result.report.removed) / static_cast<double>(result.report.total)
            : 0.0;
    return result;
}

std::string gate_report_json(const GateReport& r) {
    json j;
    j["total"] = r.total;
    j["kept"] = r.kept;
    j["removed"] = r.removed;
    j["removed_fraction"] = r.removed_fraction;
    j["per_outcome_counts"] = {{"kept_normal", r.kept_normal},
                               {"kept_abnormal", r.kept_abnormal},
                               {"removed_normal", r.removed_normal},
                               {"removed_abnormal", r.removed_abnormal}};
    return j.dump(2);
}

void save_quality_model(const QualityModel& model, const std::string& path) {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "quality_model";
    j["operating_rate_hz"] = model.operating_rate_hz;
    j["decision_threshold"] = model.decision_threshold;
    j["feature_schema_id"] = model.feature_schema_id;
    j["selection"] = {{"ranked_names", model.selection.ranked_names},
                      {"mi_scores", model.selection.mi_scores},
                      {"keep_fraction", model.selection.keep_fraction},
                      {"selected_indices", model.selection.selected_indices},
                      {"schema", model.selection.schema}};
    j["ensemble"] = json::parse(ensemble_to_json(model.ensemble));
    std::ofstream out(path);
    if (!out) throw PcgError("IoError", "cannot write " + path);
    out << j.dump(2);
}

QualityModel load_quality_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PcgError("FileNotFound", path);
    json j = json::parse(in);
    if (j.at("kind").get<std::string>() != "quality_model")
        throw PcgError("SchemaMismatch", path + ": not a quality model");
    QualityModel model;
    model.operating_rate_hz = j.at("operating_rate_hz").get<int>();
    model.decision_threshold = j.at("decision_threshold").get<double>();
    model.feature_schema_id = j.at("feature_schema_id").get<std::string>();
    const auto& s = j.at("selection");
    model.selection.ranked_names = s.at("ranked_names").get<std::vector<std::string>>();
    model.selection.mi_scores = s.at("mi_scores").get<std::vector<double>>();
    model.selection.keep_fraction = s.at("keep_fraction").get<double>();
    model.selection.selected_indices = s.at("selected_indices").get<std::vector<std::size_t>>();
    model.selection.schema = s.at("schema").get<std::vector<std::string>>();
    model.ensemble = ensemble_from_json(j.at("ensemble").dump());
    return model;
}

} // namespace pcg
