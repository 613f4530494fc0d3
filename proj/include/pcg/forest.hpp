#pragma once

#include "pcg/tree.hpp"

#include <cstdint>

namespace pcg {

struct ForestParams {
    int n_trees = 200;
    int max_depth = -1;
    int min_samples_leaf = 1;
    bool bootstrap = true; // test hook: off -> each tree sees the full sample
};

// Random forest: bootstrap resamples, sqrt(d) features per split, mean of
// leaf probabilities. Tree fitting is OpenMP-parallel with per-tree seeds
// drawn up front, so results do not depend on the thread count.
class RandomForest {
public:
    void fit(const DataMatrix& X, const std::vector<int>& y, const ForestParams& params,
             std::uint64_t seed);
    std::pair<double, double> predict_proba(const std::vector<double>& row) const;

    const std::vector<DecisionTree>& trees() const { return trees_; }
    std::vector<DecisionTree>& trees() { return trees_; }

private:
    std::vector<DecisionTree> trees_;
};

} // namespace pcg
