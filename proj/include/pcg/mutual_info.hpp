#pragma once

#include "pcg/features.hpp"

#include <string>
#include <vector>

namespace pcg {

struct SelectionModel {
    std::vector<std::string> ranked_names; // descending MI
    std::vector<double> mi_scores;         // same order
    double keep_fraction = 0.2;
    std::vector<std::size_t> selected_indices; // into the training schema
    std::vector<std::string> schema;           // training column names
};

// Histogram MI in nats: feature discretized into `bins` equal-frequency
// bins (ties broken by value order), labels binary. Constant feature -> 0.
// Throws DegenerateLabels when only one class is present.
double mutual_information(const std::vector<double>& feature, const std::vector<int>& labels,
                          int bins = 10);

// Per-feature MI (OpenMP-parallel across columns), descending rank with
// ties broken by original column index; keeps max(1, round(f * total)).
SelectionModel fit_selection(const FeatureMatrix& X, const std::vector<int>& labels,
                             double keep_fraction = 0.2, int bins = 10);

// Column subset in ranked order, keyed by name. Throws SchemaMismatch.
FeatureMatrix apply_selection(const SelectionModel& model, const FeatureMatrix& X);

// Ranking CSV: name,mi_score,selected
void write_ranking(const SelectionModel& model, const std::string& path);

} // namespace pcg
