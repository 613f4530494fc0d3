#pragma once

#include "pcg/rng.hpp"

#include <vector>

namespace pcg {

using DataMatrix = std::vector<std::vector<double>>;

struct TreeNode {
    int feature = -1; // -1 = leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value0 = 0.0; // leaf: P(class 0) for classifiers, prediction for regressors
    double value1 = 0.0; // leaf: P(class 1); unused for regressors
};

struct TreeParams {
    int max_depth = -1; // -1 = unlimited
    int min_samples_leaf = 1;
    int feature_subsample = 0; // features tried per split; 0 = all
};

// Binary CART, greedy splits at midpoints of sorted unique values.
// Classifier splits minimize weighted Gini impurity; regressor splits
// minimize weighted squared error.
class DecisionTree {
public:
    // empty weights = uniform
    void fit_classifier(const DataMatrix& X, const std::vector<int>& y,
                        const std::vector<double>& weights, const TreeParams& params, Rng& rng);

    // target is real-valued; optional hessian weights give Newton leaf
    // values sum(target)/sum(hess) instead of plain means.
    void fit_regressor(const DataMatrix& X, const std::vector<double>& target,
                       const std::vector<double>& hess, const TreeParams& params, Rng& rng);

    std::pair<double, double> predict_proba(const std::vector<double>& row) const;
    double predict_value(const std::vector<double>& row) const;

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::vector<TreeNode>& nodes() { return nodes_; }

private:
    int build(const DataMatrix& X, const std::vector<int>* y, const std::vector<double>* target,
              const std::vector<double>& w, const std::vector<double>* hess,
              std::vector<std::size_t>& idx, int depth, const TreeParams& params, Rng& rng);
    const TreeNode& descend(const std::vector<double>& row) const;

    std::vector<TreeNode> nodes_;
};

} // namespace pcg
