#include "pcg/forest.hpp"
#include "pcg/error.hpp"
#include "pcg/threading.hpp"

#include <cmath>

namespace pcg {

void RandomForest::fit(const DataMatrix& X, const std::vector<int>& y,
                       const ForestParams& params, std::uint64_t seed) {
    if (X.empty()) throw PcgError("EmptyData", "no training rows");
    const std::size_t n = X.size();
    const std::size_t d = X[0].size();

    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.min_samples_leaf = params.min_samples_leaf;
    tp.feature_subsample =
        params.n_trees > 1 ? static_cast<int>(std::max(1.0, std::floor(std::sqrt(d)))) : 0;
    if (!params.bootstrap && params.n_trees == 1) tp.feature_subsample = 0;

    // per-tree seeds drawn serially so the parallel fit is reproducible
    Rng seeder(seed);
    std::vector<std::uint64_t> seeds(params.n_trees);
    for (auto& s : seeds) s = seeder.next_u64();

    trees_.assign(params.n_trees, DecisionTree());
    const int nt = num_threads();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
    for (long t = 0; t < static_cast<long>(params.n_trees); ++t) {
        Rng rng(seeds[t]);
        DataMatrix bx;
        std::vector<int> by;
        if (params.bootstrap) {
            bx.reserve(n);
            by.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t j = rng.uniform_index(n);
                bx.push_back(X[j]);
                by.push_back(y[j]);
            }
        } else {
            bx = X;
            by = y;
        }
        std::vector<double> w(n, 1.0);
        trees_[t].fit_classifier(bx, by, w, tp, rng);
    }
    (void)nt;
}

std::pair<double, double> RandomForest::predict_proba(const std::vector<double>& row) const {
    double p0 = 0.0, p1 = 0.0;
    for (const auto& tree : trees_) {
        const auto [a, b] = tree.predict_proba(row);
        p0 += a;
        p1 += b;
    }
    const double n = static_cast<double>(trees_.size());
    return {p0 / n, p1 / n};
}

} // namespace pcg
