#pragma once

#include "pcg/tree.hpp"

#include <cstdint>
#include <vector>

namespace pcg {

enum class Kernel { linear, rbf };

struct SvmParams {
    Kernel kernel = Kernel::rbf;
    double C = 1.0;
    double gamma = 0.0; // <= 0: 1 / (d * var(standardized X))
    double tol = 1e-3;  // KKT tolerance
    long max_iter = 100000;
};

// C-SVM fit by SMO with Platt-scaled probability output. Inputs are
// standardized internally (per-column mean/std stored in the model).
class SvmModel {
public:
    void fit(const DataMatrix& X, const std::vector<int>& y, const SvmParams& params);

    double decision(const std::vector<double>& row) const; // uncalibrated
    std::pair<double, double> predict_proba(const std::vector<double>& row) const;

    bool converged() const { return converged_; }
    const std::vector<double>& dual_coefs() const { return alpha_y_; }
    double bias() const { return bias_; }
    double platt_a() const { return platt_a_; }
    double platt_b() const { return platt_b_; }
    double dual_balance() const; // |sum alpha_i y_i|

    // serialization access
    struct State {
        SvmParams params;
        std::vector<std::vector<double>> support_vectors; // standardized space
        std::vector<double> alpha_y;
        double bias = 0.0, platt_a = 0.0, platt_b = 0.0, gamma = 0.0;
        std::vector<double> col_mean, col_std;
        bool converged = true;
    };
    State state() const;
    void restore(const State& s);

private:
    std::vector<double> standardize(const std::vector<double>& row) const;
    double kernel_eval(const std::vector<double>& a, const std::vector<double>& b) const;

    SvmParams params_;
    std::vector<std::vector<double>> support_vectors_;
    std::vector<double> alpha_y_; // alpha_i * y_i per support vector
    double bias_ = 0.0;
    double gamma_ = 0.0;
    double platt_a_ = 0.0, platt_b_ = 0.0;
    std::vector<double> col_mean_, col_std_;
    bool converged_ = true;
    double dual_balance_ = 0.0;
};

} // namespace pcg
