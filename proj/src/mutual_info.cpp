#include "pcg/mutual_info.hpp"
#include "pcg/error.hpp"
#include "pcg/threading.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

namespace pcg {

double mutual_information(const std::vector<double>& feature, const std::vector<int>& labels,
                          int bins) {
    if (feature.size() != labels.size())
        throw PcgError("LengthMismatch", "feature/label size mismatch");
    const std::size_t n = feature.size();
    if (n < 10) throw PcgError("BadArgument", "need at least 10 samples");
    bool has0 = false, has1 = false;
    for (int y : labels) (y ? has1 : has0) = true;
    if (!has0 || !has1) throw PcgError("DegenerateLabels", "single class");

    const auto [mn, mx] = std::minmax_element(feature.begin(), feature.end());
    if (*mn == *mx) return 0.0;

    // equal-frequency binning on ranks; stable sort = ties broken by order
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return feature[a] < feature[b]; });

    const std::size_t b_count = static_cast<std::size_t>(bins);
    std::vector<std::vector<double>> joint(b_count, std::vector<double>(2, 0.0));
    std::vector<double> pb(b_count, 0.0), py(2, 0.0);
    for (std::size_t rank = 0; rank < n; ++rank) {
        const std::size_t b = rank * b_count / n;
        const int y = labels[order[rank]] ? 1 : 0;
        joint[b][y] += 1.0;
        pb[b] += 1.0;
        py[y] += 1.0;
    }
    double mi = 0.0;
    const double dn = static_cast<double>(n);
    for (std::size_t b = 0; b < b_count; ++b)
        for (int y = 0; y < 2; ++y) {
            const double pxy = joint[b][y] / dn;
            if (pxy > 0.0) mi += pxy * std::log(pxy * dn * dn / (pb[b] * py[y]));
        }
    return std::max(0.0, mi);
}

SelectionModel fit_selection(const FeatureMatrix& X, const std::vector<int>& labels,
                             double keep_fraction, int bins) {
    if (keep_fraction <= 0.0 || keep_fraction > 1.0)
        throw PcgError("BadArgument", "keep_fraction out of (0, 1]");
    const std::size_t d = X.names.size();
    std::vector<double> scores(d, 0.0);
    const int nt = num_threads();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
    for (long j = 0; j < static_cast<long>(d); ++j) {
        std::vector<double> col(X.rows.size());
        for (std::size_t i = 0; i < X.rows.size(); ++i) col[i] = X.rows[i][j];
        scores[j] = mutual_information(col, labels, bins);
    }
    (void)nt;

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b; // tie-break: original column index
    });

    SelectionModel model;
    model.keep_fraction = keep_fraction;
    model.schema = X.names;
    const std::size_t keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(d))));
    for (std::size_t r = 0; r < d; ++r) {
        model.ranked_names.push_back(X.names[order[r]]);
        model.mi_scores.push_back(scores[order[r]]);
        if (r < keep) model.selected_indices.push_back(order[r]);
    }
    return model;
}

FeatureMatrix apply_selection(const SelectionModel& model, const FeatureMatrix& X) {
    std::unordered_map<std::string, std::size_t> by_name;
    for (std::size_t j = 0; j < X.names.size(); ++j) by_name[X.names[j]] = j;

    std::vector<std::size_t> cols;
    FeatureMatrix out;
    for (std::size_t idx : model.selected_indices) {
        const std::string& name = model.schema[idx];
        auto it = by_name.find(name);
        if (it == by_name.end()) throw PcgError("SchemaMismatch", "missing column " + name);
        cols.push_back(it->second);
        out.names.push_back(name);
    }
    out.rows.reserve(X.rows.size());
    for (const auto& row : X.rows) {
        std::vector<double> r;
        r.reserve(cols.size());
        for (std::size_t c : cols) r.push_back(row[c]);
        out.rows.push_back(std::move(r));
    }
    return out;
}

void write_ranking(const SelectionModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PcgError("IoError", "cannot write " + path);
    out << "name,mi_score,selected\n";
    out.precision(17);
    const std::size_t keep = model.selected_indices.size();
    for (std::size_t r = 0; r < model.ranked_names.size(); ++r)
        out << model.ranked_names[r] << ',' << model.mi_scores[r] << ',' << (r < keep ? 1 : 0)
            << "\n";
}

} // namespace pcg
