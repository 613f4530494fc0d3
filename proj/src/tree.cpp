#include "pcg/tree.hpp"
#include "pcg/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pcg {

namespace {

// Candidate split of one node; cost is the weighted post-split impurity.
struct Split {
    int feature = -1;
    double threshold = 0.0;
    double cost = std::numeric_limits<double>::infinity();
};

double gini(double w0, double w1) {
    const double w = w0 + w1;
    if (w <= 0.0) return 0.0;
    const double p0 = w0 / w;
    const double p1 = w1 / w;
    return w * (1.0 - p0 * p0 - p1 * p1);
}

} // namespace

int DecisionTree::build(const DataMatrix& X, const std::vector<int>* y,
                        const std::vector<double>* target, const std::vector<double>& w,
                        const std::vector<double>* hess, std::vector<std::size_t>& idx, int depth,
                        const TreeParams& params, Rng& rng) {
    const int node_id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    // leaf statistics
    double w0 = 0.0, w1 = 0.0, tsum = 0.0, hsum = 0.0;
    for (std::size_t i : idx) {
        if (y) {
            if ((*y)[i]) w1 += w[i];
            else w0 += w[i];
        } else {
            tsum += (*target)[i];
            hsum += hess ? (*hess)[i] : 1.0;
        }
    }
    auto make_leaf = [&] {
        TreeNode& node = nodes_[node_id];
        if (y) {
            const double total = w0 + w1;
            node.value0 = total > 0.0 ? w0 / total : 0.5;
            node.value1 = total > 0.0 ? w1 / total : 0.5;
        } else {
            node.value0 = hsum > 1e-12 ? tsum / hsum : 0.0;
        }
        return node_id;
    };

    const bool pure = y && (w0 <= 0.0 || w1 <= 0.0);
    if (pure || (params.max_depth >= 0 && depth >= params.max_depth) ||
        idx.size() < 2 * static_cast<std::size_t>(params.min_samples_leaf) || idx.size() < 2)
        return make_leaf();

    const std::size_t d = X[0].size();
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    if (params.feature_subsample > 0 && static_cast<std::size_t>(params.feature_subsample) < d) {
        // Fisher-Yates prefix of the requested size
        for (int k = 0; k < params.feature_subsample; ++k) {
            const std::size_t j = k + rng.uniform_index(d - k);
            std::swap(features[k], features[j]);
        }
        features.resize(params.feature_subsample);
        std::sort(features.begin(), features.end()); // scan order independent of draw order
    }

    Split best;
    std::vector<std::size_t> sorted(idx);
    for (std::size_t f : features) {
        std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
            return X[a][f] < X[b][f];
        });
        // prefix scan over sorted order
        double lw0 = 0.0, lw1 = 0.0, lt = 0.0, lh = 0.0, lt2 = 0.0;
        double rw0 = w0, rw1 = w1, rt = tsum, rh = hsum, rt2 = 0.0;
        if (!y) {
            for (std::size_t i : sorted) rt2 += (*target)[i] * (*target)[i];
        }
        for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
            const std::size_t i = sorted[k];
            if (y) {
                if ((*y)[i]) { lw1 += w[i]; rw1 -= w[i]; }
                else { lw0 += w[i]; rw0 -= w[i]; }
            } else {
                const double t = (*target)[i];
                const double h = hess ? (*hess)[i] : 1.0;
                lt += t; rt -= t;
                lh += h; rh -= h;
                lt2 += t * t; rt2 -= t * t;
            }
            const double xl = X[i][f];
            const double xr = X[sorted[k + 1]][f];
            if (xr <= xl) continue; // no distinct boundary here
            if (k + 1 < static_cast<std::size_t>(params.min_samples_leaf) ||
                sorted.size() - k - 1 < static_cast<std::size_t>(params.min_samples_leaf))
                continue;
            double cost;
            if (y) {
                cost = gini(lw0, lw1) + gini(rw0, rw1);
            } else {
                // sse = sum t^2 - (sum t)^2 / sum h  (h=1 -> plain variance cost)
                const double lcost = lt2 - (lh > 1e-12 ? lt * lt / lh : 0.0);
                const double rcost = rt2 - (rh > 1e-12 ? rt * rt / rh : 0.0);
                cost = lcost + rcost;
            }
            if (cost < best.cost - 1e-15) {
                best.cost = cost;
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (xl + xr);
            }
        }
    }

    if (best.feature < 0) return make_leaf();

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
        if (X[i][best.feature] <= best.threshold) left_idx.push_back(i);
        else right_idx.push_back(i);
    }
    if (left_idx.empty() || right_idx.empty()) return make_leaf();

    const int left = build(X, y, target, w, hess, left_idx, depth + 1, params, rng);
    const int right = build(X, y, target, w, hess, right_idx, depth + 1, params, rng);
    TreeNode& node = nodes_[node_id];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return node_id;
}

void DecisionTree::fit_classifier(const DataMatrix& X, const std::vector<int>& y,
                                  const std::vector<double>& weights, const TreeParams& params,
                                  Rng& rng) {
    if (X.empty()) throw PcgError("EmptyData", "no training rows");
    nodes_.clear();
    std::vector<std::size_t> idx(X.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (weights.empty()) {
        const std::vector<double> unit_w(X.size(), 1.0);
        build(X, &y, nullptr, unit_w, nullptr, idx, 0, params, rng);
    } else {
        build(X, &y, nullptr, weights, nullptr, idx, 0, params, rng);
    }
}

void DecisionTree::fit_regressor(const DataMatrix& X, const std::vector<double>& target,
                                 const std::vector<double>& hess, const TreeParams& params,
                                 Rng& rng) {
    if (X.empty()) throw PcgError("EmptyData", "no training rows");
    nodes_.clear();
    std::vector<double> unit_w(X.size(), 1.0);
    std::vector<std::size_t> idx(X.size());
    std::iota(idx.begin(), idx.end(), 0);
    build(X, nullptr, &target, unit_w, hess.empty() ? nullptr : &hess, idx, 0, params, rng);
}

const TreeNode& DecisionTree::descend(const std::vector<double>& row) const {
    int cur = 0;
    while (nodes_[cur].feature >= 0)
        cur = row[nodes_[cur].feature] <= nodes_[cur].threshold ? nodes_[cur].left
                                                                : nodes_[cur].right;
    return nodes_[cur];
}

std::pair<double, double> DecisionTree::predict_proba(const std::vector<double>& row) const {
    const TreeNode& leaf = descend(row);
    return {leaf.value0, leaf.value1};
}

double DecisionTree::predict_value(const std::vector<double>& row) const {
    return descend(row).value0;
}

} // namespace pcg
