#pragma once

#include "pcg/tree.hpp"

#include <cstdint>

namespace pcg {

struct BoostParams {
    int n_rounds = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    int min_samples_leaf = 1;
};

// Gradient boosting on binomial log-loss: stagewise regression trees on the
// gradient w.r.t. log-odds, Newton leaf values, logistic link.
class GradientBoosting {
public:
    void fit(const DataMatrix& X, const std::vector<int>& y, const BoostParams& params,
             std::uint64_t seed);
    std::pair<double, double> predict_proba(const std::vector<double>& row) const;
    double decision(const std::vector<double>& row) const; // log-odds

    const std::vector<double>& loss_curve() const { return loss_curve_; }
    double initial_score() const { return initial_score_; }
    const std::vector<DecisionTree>& trees() const { return trees_; }

    // serialization hooks
    std::vector<DecisionTree>& trees() { return trees_; }
    void set_initial_score(double s) { initial_score_ = s; }
    void set_learning_rate(double lr) { learning_rate_ = lr; }
    double learning_rate() const { return learning_rate_; }

private:
    std::vector<DecisionTree> trees_;
    double initial_score_ = 0.0; // log-odds of the class prior
    double learning_rate_ = 0.1;
    std::vector<double> loss_curve_; // training log-loss per round
};

} // namespace pcg
