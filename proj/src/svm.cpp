#include "pcg/svm.hpp"
#include "pcg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pcg {

namespace {

// Platt's sigmoid fit (Lin, Lu, Weng 2007 variant): minimize the
// cross-entropy of 1/(1+exp(A*f+B)) against smoothed targets by Newton
// iterations with backtracking.
void fit_platt(const std::vector<double>& decision, const std::vector<int>& y, double& A,
               double& B) {
    const std::size_t n = decision.size();
    double prior1 = 0.0;
    for (int v : y) prior1 += v;
    const double prior0 = static_cast<double>(n) - prior1;
    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = y[i] ? hi : lo;

    A = 0.0;
    B = std::log((prior0 + 1.0) / (prior1 + 1.0));

    auto objective = [&](double a, double b) {
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = a * decision[i] + b;
            // stable log(1+exp(..)) forms
            if (z >= 0) obj += t[i] * z + std::log(1.0 + std::exp(-z));
            else obj += (t[i] - 1.0) * z + std::log(1.0 + std::exp(z));
        }
        return obj;
    };

    double obj = objective(A, B);
    for (int iter = 0; iter < 100; ++iter) {
        double g1 = 0.0, g2 = 0.0, h11 = 1e-12, h22 = 1e-12, h21 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = A * decision[i] + B;
            const double p = z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z))
                                    : 1.0 / (1.0 + std::exp(z));
            const double d1 = t[i] - p;
            const double d2 = p * (1.0 - p);
            g1 += decision[i] * d1;
            g2 += d1;
            h11 += decision[i] * decision[i] * d2;
            h22 += d2;
            h21 += decision[i] * d2;
        }
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
        const double det = h11 * h22 - h21 * h21;
        const double dA = -(h22 * g1 - h21 * g2) / det;
        const double dB = -(-h21 * g1 + h11 * g2) / det;
        const double g_d = g1 * dA + g2 * dB;
        double step = 1.0;
        bool moved = false;
        while (step >= 1e-10) {
            const double na = A + step * dA;
            const double nb = B + step * dB;
            const double nobj = objective(na, nb);
            if (nobj < obj + 1e-4 * step * g_d) {
                A = na;
                B = nb;
                obj = nobj;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
}

} // namespace

std::vector<double> SvmModel::standardize(const std::vector<double>& row) const {
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j)
        out[j] = (row[j] - col_mean_[j]) / col_std_[j];
    return out;
}

double SvmModel::kernel_eval(const std::vector<double>& a, const std::vector<double>& b) const {
    if (params_.kernel == Kernel::linear) {
        double dot = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) dot += a[j] * b[j];
        return dot;
    }
    double dist = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        dist += d * d;
    }
    return std::exp(-gamma_ * dist);
}

void SvmModel::fit(const DataMatrix& X, const std::vector<int>& y_in, const SvmParams& params) {
    if (X.empty()) throw PcgError("EmptyData", "no training rows");
    params_ = params;
    const std::size_t n = X.size();
    const std::size_t d = X[0].size();

    col_mean_.assign(d, 0.0);
    col_std_.assign(d, 0.0);
    for (const auto& row : X)
        for (std::size_t j = 0; j < d; ++j) col_mean_[j] += row[j];
    for (auto& m : col_mean_) m /= static_cast<double>(n);
    for (const auto& row : X)
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = row[j] - col_mean_[j];
            col_std_[j] += diff * diff;
        }
    for (auto& s : col_std_) {
        s = std::sqrt(s / static_cast<double>(n));
        if (s < 1e-12) s = 1.0; // constant column passes through unscaled
    }

    DataMatrix Z(n);
    for (std::size_t i = 0; i < n; ++i) Z[i] = standardize(X[i]);

    double var = 0.0;
    for (const auto& row : Z)
        for (double v : row) var += v * v;
    var /= static_cast<double>(n * d);
    gamma_ = params.gamma > 0.0 ? params.gamma
                                : 1.0 / (static_cast<double>(d) * std::max(var, 1e-12));

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = y_in[i] ? 1.0 : -1.0;

    // precomputed kernel matrix; training sets here are small
    std::vector<std::vector<double>> K(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) K[i][j] = K[j][i] = kernel_eval(Z[i], Z[j]);

    const double C = params.C;
    const double tol = params.tol;
    const double eps = 1e-12;
    std::vector<double> alpha(n, 0.0);
    std::vector<double> err(n); // f(x_i) - y_i with f excluding no terms
    for (std::size_t i = 0; i < n; ++i) err[i] = -y[i];
    double b = 0.0;
    long iterations = 0;
    converged_ = true;

    auto take_step = [&](std::size_t i1, std::size_t i2) -> bool {
        if (i1 == i2) return false;
        const double a1 = alpha[i1], a2 = alpha[i2];
        const double y1 = y[i1], y2 = y[i2];
        const double e1 = err[i1], e2 = err[i2];
        const double s = y1 * y2;
        double L, H;
        if (s < 0) {
            L = std::max(0.0, a2 - a1);
            H = std::min(C, C + a2 - a1);
        } else {
            L = std::max(0.0, a1 + a2 - C);
            H = std::min(C, a1 + a2);
        }
        if (H - L < eps) return false;
        const double eta = K[i1][i1] + K[i2][i2] - 2.0 * K[i1][i2];
        double a2_new;
        if (eta > eps) {
            a2_new = std::clamp(a2 + y2 * (e1 - e2) / eta, L, H);
        } else {
            // flat direction: pick the bound with the lower objective
            const double f1 = y1 * (e1 + b) - a1 * K[i1][i1] - s * a2 * K[i1][i2];
            const double f2 = y2 * (e2 + b) - s * a1 * K[i1][i2] - a2 * K[i2][i2];
            const double l1 = a1 + s * (a2 - L);
            const double h1 = a1 + s * (a2 - H);
            const double obj_l = l1 * f1 + L * f2 + 0.5 * l1 * l1 * K[i1][i1] +
                                 0.5 * L * L * K[i2][i2] + s * L * l1 * K[i1][i2];
            const double obj_h = h1 * f1 + H * f2 + 0.5 * h1 * h1 * K[i1][i1] +
                                 0.5 * H * H * K[i2][i2] + s * H * h1 * K[i1][i2];
            if (obj_l < obj_h - eps) a2_new = L;
            else if (obj_h < obj_l - eps) a2_new = H;
            else return false;
        }
        if (std::abs(a2_new - a2) < eps * (a2_new + a2 + eps)) return false;
        const double a1_new = a1 + s * (a2 - a2_new);

        const double b1 = b - e1 - y1 * (a1_new - a1) * K[i1][i1] - y2 * (a2_new - a2) * K[i1][i2];
        const double b2 = b - e2 - y1 * (a1_new - a1) * K[i1][i2] - y2 * (a2_new - a2) * K[i2][i2];
        double b_new;
        if (a1_new > eps && a1_new < C - eps) b_new = b1;
        else if (a2_new > eps && a2_new < C - eps) b_new = b2;
        else b_new = 0.5 * (b1 + b2);

        const double db = b_new - b;
        for (std::size_t i = 0; i < n; ++i)
            err[i] += y1 * (a1_new - a1) * K[i1][i] + y2 * (a2_new - a2) * K[i2][i] + db;
        alpha[i1] = a1_new;
        alpha[i2] = a2_new;
        b = b_new;
        return true;
    };

    auto examine = [&](std::size_t i2) -> bool {
        const double y2 = y[i2], a2 = alpha[i2], e2 = err[i2];
        const double r2 = e2 * y2;
        if ((r2 < -tol && a2 < C - eps) || (r2 > tol && a2 > eps)) {
            // heuristic 1: max |e1 - e2| over non-bound alphas
            std::size_t best = n;
            double best_gap = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (alpha[i] <= eps || alpha[i] >= C - eps) continue;
                const double gap = std::abs(err[i] - e2);
                if (gap > best_gap) {
                    best_gap = gap;
                    best = i;
                }
            }
            if (best < n && take_step(best, i2)) return true;
            // heuristic 2: all non-bound, then all
            for (std::size_t i = 0; i < n; ++i)
                if (alpha[i] > eps && alpha[i] < C - eps && take_step(i, i2)) return true;
            for (std::size_t i = 0; i < n; ++i)
                if (take_step(i, i2)) return true;
        }
        return false;
    };

    bool examine_all = true;
    while (converged_) {
        int changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!examine_all && (alpha[i] <= eps || alpha[i] >= C - eps)) continue;
            if (examine(i)) ++changed;
            if (++iterations > params.max_iter) {
                converged_ = false;
                break;
            }
        }
        if (examine_all) {
            if (changed == 0) break; // full pass with no KKT violations
            examine_all = false;
        } else if (changed == 0) {
            examine_all = true;
        }
    }

    dual_balance_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) dual_balance_ += alpha[i] * y[i];

    support_vectors_.clear();
    alpha_y_.clear();
    for (std::size_t i = 0; i < n; ++i)
        if (alpha[i] > eps) {
            support_vectors_.push_back(Z[i]);
            alpha_y_.push_back(alpha[i] * y[i]);
        }
    if (support_vectors_.empty()) { // fully separable with zero loss never happens, but guard
        support_vectors_.push_back(Z[0]);
        alpha_y_.push_back(0.0);
    }
    bias_ = b;

    // Platt calibration on held-in decision values
    std::vector<double> dec(n);
    for (std::size_t i = 0; i < n; ++i) {
        double f = bias_;
        for (std::size_t s = 0; s < support_vectors_.size(); ++s)
            f += alpha_y_[s] * kernel_eval(support_vectors_[s], Z[i]);
        dec[i] = f;
    }
    fit_platt(dec, y_in, platt_a_, platt_b_);
}

double SvmModel::decision(const std::vector<double>& row) const {
    const std::vector<double> z = standardize(row);
    double f = bias_;
    for (std::size_t s = 0; s < support_vectors_.size(); ++s)
        f += alpha_y_[s] * kernel_eval(support_vectors_[s], z);
    return f;
}

std::pair<double, double> SvmModel::predict_proba(const std::vector<double>& row) const {
    const double z = platt_a_ * decision(row) + platt_b_;
    const double p1 = z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
    return {1.0 - p1, p1};
}

double SvmModel::dual_balance() const { return std::abs(dual_balance_); }

SvmModel::State SvmModel::state() const {
    State s;
    s.params = params_;
    s.support_vectors = support_vectors_;
    s.alpha_y = alpha_y_;
    s.bias = bias_;
    s.platt_a = platt_a_;
    s.platt_b = platt_b_;
    s.gamma = gamma_;
    s.col_mean = col_mean_;
    s.col_std = col_std_;
    s.converged = converged_;
    return s;
}

void SvmModel::restore(const State& s) {
    params_ = s.params;
    support_vectors_ = s.support_vectors;
    alpha_y_ = s.alpha_y;
    bias_ = s.bias;
    platt_a_ = s.platt_a;
    platt_b_ = s.platt_b;
    gamma_ = s.gamma;
    col_mean_ = s.col_mean;
    col_std_ = s.col_std;
    converged_ = s.converged;
}

} // namespace pcg
