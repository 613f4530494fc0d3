#include "pcg/boosting.hpp"
#include "pcg/error.hpp"

#include <algorithm>
#include <cmath>

namespace pcg {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double log_loss(const std::vector<double>& scores, const std::vector<int>& y) {
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = std::clamp(sigmoid(scores[i]), 1e-12, 1.0 - 1e-12);
        loss -= y[i] ? std::log(p) : std::log(1.0 - p);
    }
    return loss / static_cast<double>(y.size());
}

} // namespace

void GradientBoosting::fit(const DataMatrix& X, const std::vector<int>& y,
                           const BoostParams& params, std::uint64_t seed) {
    if (X.empty()) throw PcgError("EmptyData", "no training rows");
    trees_.clear();
    loss_curve_.clear();
    learning_rate_ = params.learning_rate;

    const std::size_t n = X.size();
    double pos = 0.0;
    for (int v : y) pos += v;
    const double prior = pos / static_cast<double>(n);
    if (prior <= 0.0 || prior >= 1.0) {
        // single class: constant model at a saturated prior
        initial_score_ = prior <= 0.0 ? -20.0 : 20.0;
        return;
    }
    initial_score_ = std::log(prior / (1.0 - prior));

    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.min_samples_leaf = params.min_samples_leaf;

    Rng rng(seed);
    std::vector<double> scores(n, initial_score_);
    std::vector<double> grad(n), hess(n);
    for (int round = 0; round < params.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(scores[i]);
            grad[i] = static_cast<double>(y[i]) - p; // negative gradient of log-loss
            hess[i] = std::max(p * (1.0 - p), 1e-12);
        }
        DecisionTree tree;
        tree.fit_regressor(X, grad, hess, tp, rng);
        trees_.push_back(tree);
        for (std::size_t i = 0; i < n; ++i)
            scores[i] += learning_rate_ * tree.predict_value(X[i]);
        loss_curve_.push_back(log_loss(scores, y));
    }
}

double GradientBoosting::decision(const std::vector<double>& row) const {
    double score = initial_score_;
    for (const auto& tree : trees_) score += learning_rate_ * tree.predict_value(row);
    return score;
}

std::pair<double, double> GradientBoosting::predict_proba(const std::vector<double>& row) const {
    const double p1 = sigmoid(decision(row));
    return {1.0 - p1, p1};
}

} // namespace pcg
