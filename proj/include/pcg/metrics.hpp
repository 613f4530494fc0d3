#pragma once

#include "pcg/manifest.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace pcg {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t n() const { return tp + fp + tn + fn; }
};

struct BasicMetrics {
    double accuracy = 0.0, precision = 0.0, recall = 0.0, specificity = 0.0, f1 = 0.0;
    bool degenerate = false; // some 0/0 ratio was reported as 0
};

// Positive class = 1 throughout.
ConfusionCounts confusion(const std::vector<int>& labels, const std::vector<int>& predictions);
BasicMetrics basic_metrics(const ConfusionCounts& c);

// Mann-Whitney formulation; ties contribute 0.5. Throws SingleClass.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

struct CostConfig {
    double c_algorithm = 10.0;
    double c_treatment = 10000.0;
    double c_error = 50000.0;
    // expert cost polynomial in s/t (s = referred positives, t = cohort size)
    double a0 = 25.0, a1 = 397.0, a2 = -1718.0, a4 = 11296.0;
};

// c_alg*t + (a0 + a1*(s/t) + a2*(s/t)^2 + a4*(s/t)^4)*t + c_treat*tp + c_err*fn
double screening_cost(const ConfusionCounts& c, const CostConfig& cfg);

struct EvalReport {
    ConfusionCounts counts;
    BasicMetrics overall;
    double auroc_value = 0.0;
    bool auroc_defined = false;
    double cost = 0.0;
    // per-class (index 0 = negative, 1 = positive)
    double class_accuracy[2] = {0.0, 0.0};
    double class_f1[2] = {0.0, 0.0};
    std::string positive_class = "abnormal";
};

struct Prediction {
    std::string id;
    double score = 0.0;
    int label = 0;
};

// CSV with header id,p_abnormal,label
std::vector<Prediction> read_predictions_csv(const std::string& path);
void write_predictions_csv(const std::vector<Prediction>& preds, const std::string& path);

// Joins predictions to the truth manifest by id (manifest path). Throws
// IdMismatch when a prediction id is absent from the manifest or counts differ.
EvalReport evaluate_run(const std::vector<Prediction>& preds, const Manifest& truth,
                        const CostConfig& cfg);

std::string report_json(const EvalReport& r, const CostConfig& cfg);

} // namespace pcg
