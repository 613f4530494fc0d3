#include "pcg/metrics.hpp"
#include "pcg/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace pcg {

using nlohmann::json;

ConfusionCounts confusion(const std::vector<int>& labels, const std::vector<int>& predictions) {
    if (labels.empty() || labels.size() != predictions.size())
        throw PcgError("LengthMismatch", "labels/predictions must be equal non-zero length");
    ConfusionCounts c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) (predictions[i] ? c.tp : c.fn)++;
        else (predictions[i] ? c.fp : c.tn)++;
    }
    return c;
}

namespace {

double ratio(std::size_t num, std::size_t den, bool& degenerate) {
    if (den == 0) {
        degenerate = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

BasicMetrics basic_metrics(const ConfusionCounts& c) {
    BasicMetrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.n());
    m.precision = ratio(c.tp, c.tp + c.fp, m.degenerate);
    m.recall = ratio(c.tp, c.tp + c.fn, m.degenerate);
    m.specificity = ratio(c.tn, c.tn + c.fp, m.degenerate);
    if (m.precision + m.recall > 0.0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else {
        m.f1 = 0.0;
        m.degenerate = true;
    }
    return m;
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw PcgError("LengthMismatch", "scores/labels size mismatch");
    std::size_t n1 = 0, n0 = 0;
    for (int y : labels) (y ? n1 : n0)++;
    if (n1 == 0 || n0 == 0) throw PcgError("SingleClass", "auroc needs both classes");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // midranks over tie groups
    std::vector<double> rank(scores.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
        i = j + 1;
    }

    double rank_sum = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k)
        if (labels[k]) rank_sum += rank[k];
    return (rank_sum - static_cast<double>(n1) * (n1 + 1) / 2.0) /
           (static_cast<double>(n1) * static_cast<double>(n0));
}

double screening_cost(const ConfusionCounts& c, const CostConfig& cfg) {
    const double t = static_cast<double>(c.n());
    if (t <= 0.0) throw PcgError("LengthMismatch", "empty cohort");
    const double s = static_cast<double>(c.tp + c.fp);
    const double r = s / t;
    const double expert = cfg.a0 + cfg.a1 * r + cfg.a2 * r * r + cfg.a4 * r * r * r * r;
    return cfg.c_algorithm * t + expert * t + cfg.c_treatment * static_cast<double>(c.tp) +
           cfg.c_error * static_cast<double>(c.fn);
}

std::vector<Prediction> read_predictions_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PcgError("FileNotFound", path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("id,", 0) != 0)
        throw PcgError("MissingColumn", path + ": expected header id,p_abnormal,label");
    std::vector<Prediction> preds;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        Prediction p;
        std::string field;
        std::getline(ss, p.id, ',');
        std::getline(ss, field, ',');
        p.score = std::stod(field);
        std::getline(ss, field, ',');
        p.label = std::stoi(field);
        preds.push_back(std::move(p));
    }
    return preds;
}

void write_predictions_csv(const std::vector<Prediction>& preds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PcgError("IoError", "cannot write " + path);
    out.precision(17);
    out << "id,p_abnormal,label\n";
    for (const auto& p : preds) out << p.id << "," << p.score << "," << p.label << "\n";
}

EvalReport evaluate_run(const std::vector<Prediction>& preds, const Manifest& truth,
                        const CostConfig& cfg) {
    std::unordered_map<std::string, const ManifestRow*> by_id;
    for (const auto& row : truth.rows) by_id[row.path] = &row;
    if (preds.empty() || preds.size() != truth.rows.size())
        throw PcgError("IdMismatch", "prediction/truth row counts differ");

    std::vector<int> y, yhat;
    std::vector<double> scores;
    for (const auto& p : preds) {
        auto it = by_id.find(p.id);
        if (it == by_id.end()) throw PcgError("IdMismatch", p.id + " not in truth manifest");
        if (!it->second->outcome_label)
            throw PcgError("BadLabel", p.id + ": truth row has no outcome label");
        y.push_back(*it->second->outcome_label == Outcome::abnormal ? 1 : 0);
        yhat.push_back(p.label);
        scores.push_back(p.score);
    }

    EvalReport r;
    r.counts = confusion(y, yhat);
    r.overall = basic_metrics(r.counts);
    r.cost = screening_cost(r.counts, cfg);
    const bool both = r.counts.tp + r.counts.fn > 0 && r.counts.tn + r.counts.fp > 0;
    if (both) {
        r.auroc_value = auroc(scores, y);
        r.auroc_defined = true;
    }
    // per-class view: class 1 as positive, then class 0 as positive
    for (int cls = 0; cls < 2; ++cls) {
        ConfusionCounts cc = r.counts;
        if (cls == 0) cc = {r.counts.tn, r.counts.fn, r.counts.tp, r.counts.fp};
        const BasicMetrics m = basic_metrics(cc);
        r.class_accuracy[cls] = m.recall; // fraction of the class predicted correctly
        r.class_f1[cls] = m.f1;
    }
    return r;
}

std::string report_json(const EvalReport& r, const CostConfig& cfg) {
    json j;
    j["positive_class"] = r.positive_class;
    j["confusion"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn},
                      {"fn", r.counts.fn}};
    j["accuracy"] = r.overall.accuracy;
    j["precision"] = r.overall.precision;
    j["recall"] = r.overall.recall;
    j["specificity"] = r.overall.specificity;
    j["f1"] = r.overall.f1;
    j["degenerate_ratios"] = r.overall.degenerate;
    if (r.auroc_defined) j["auroc"] = r.auroc_value;
    j["cost"] = r.cost;
    j["per_class"] = {{"accuracy", {r.class_accuracy[0], r.class_accuracy[1]}},
                      {"f1", {r.class_f1[0], r.class_f1[1]}}};
    j["cost_config"] = {{"c_algorithm", cfg.c_algorithm}, {"c_treatment", cfg.c_treatment},
                        {"c_error", cfg.c_error},         {"a0", cfg.a0},
                        {"a1", cfg.a1},                   {"a2", cfg.a2},
                        {"a4", cfg.a4}};
    return j.dump(2);
}

} // namespace pcg
