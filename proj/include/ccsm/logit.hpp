#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ccsm/cohort_builder.hpp"
#include "ccsm/error.hpp"
#include "ccsm/miner.hpp"

namespace ccsm {

// Dense row-major matrix, just large enough for the design matrices here.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }
};

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double log1pexp(double x) {
    if (x > 0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

inline double wald_p_value(double coefficient, double standard_error) {
    if (!(standard_error > 0.0)) {
        throw ArgumentError("Wald test requires a positive standard error");
    }
    const double z = std::fabs(coefficient / standard_error);
    return 2.0 * (1.0 - standard_normal_cdf(z));
}

// Fixed design for the per-itemset model. Age is mean-centered across the
// supplied rows; the shift moves only the intercept.
inline constexpr std::array<const char*, 6> kDesignColumnNames = {
    "intercept", "age", "gender", "x", "exposure", "x_exposure"};
inline constexpr size_t kDesignColumns = 6;

struct DesignData {
    Matrix x;
    std::vector<double> y;
    double age_mean = 0.0;
};

inline DesignData build_design(const std::vector<RegressionRow>& rows) {
    DesignData d;
    d.x = Matrix(rows.size(), kDesignColumns);
    d.y.resize(rows.size());
    double age_sum = 0.0;
    for (const auto& row : rows) age_sum += row.age;
    d.age_mean = rows.empty() ? 0.0 : age_sum / static_cast<double>(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        d.x.at(i, 0) = 1.0;
        d.x.at(i, 1) = row.age - d.age_mean;
        d.x.at(i, 2) = row.gender == 2 ? 1.0 : 0.0;
        d.x.at(i, 3) = row.x_present ? 1.0 : 0.0;
        d.x.at(i, 4) = row.exposure_present ? 1.0 : 0.0;
        d.x.at(i, 5) = (row.x_present && row.exposure_present) ? 1.0 : 0.0;
        d.y[i] = row.outcome ? 1.0 : 0.0;
    }
    return d;
}

struct FitOptions {
    double tolerance = 1e-8;          // max |coefficient change| convergence
    int max_iterations = 50;
    double separation_threshold = 15.0;
    double ridge = 1e-10;             // jitter on the weighted normal equations
    bool record_trace = false;
};

struct FitResult {
    std::vector<double> coefficients;
    std::vector<double> standard_errors;
    std::vector<double> z_scores;
    std::vector<double> p_values;
    bool converged = false;
    int iterations = 0;
    double log_likelihood = 0.0;
    bool separation = false;
    bool collinear = false;
    std::vector<double> log_likelihood_trace;  // filled when record_trace is set
};

namespace detail {

inline double log_likelihood_at(const Matrix& x, const std::vector<double>& y,
                                const std::vector<double>& w) {
    double ll = 0.0;
    for (size_t i = 0; i < x.rows; ++i) {
        double eta = 0.0;
        for (size_t j = 0; j < x.cols; ++j) eta += x.at(i, j) * w[j];
        ll += y[i] * eta - log1pexp(eta);
    }
    return ll;
}

// Cholesky solve of the symmetric positive definite system A z = b.
// Returns false when A is not numerically positive definite.
inline bool cholesky_solve(Matrix a, std::vector<double> b, std::vector<double>& z) {
    const size_t n = a.rows;
    for (size_t j = 0; j < n; ++j) {
        double d = a.at(j, j);
        for (size_t k = 0; k < j; ++k) d -= a.at(j, k) * a.at(j, k);
        if (!(d > 0.0)) return false;
        const double l = std::sqrt(d);
        a.at(j, j) = l;
        for (size_t i = j + 1; i < n; ++i) {
            double v = a.at(i, j);
            for (size_t k = 0; k < j; ++k) v -= a.at(i, k) * a.at(j, k);
            a.at(i, j) = v / l;
        }
    }
    for (size_t i = 0; i < n; ++i) {  // forward: L u = b
        double v = b[i];
        for (size_t k = 0; k < i; ++k) v -= a.at(i, k) * b[k];
        b[i] = v / a.at(i, i);
    }
    z.assign(n, 0.0);
    for (size_t i = n; i-- > 0;) {  // backward: L^T z = u
        double v = b[i];
        for (size_t k = i + 1; k < n; ++k) v -= a.at(k, i) * z[k];
        z[i] = v / a.at(i, i);
    }
    return true;
}

// Inverse diagonal of A via Cholesky, escalating the jitter when A is
// numerically singular (separated fits). Returns variances.
inline std::vector<double> inverse_diagonal(const Matrix& a) {
    const size_t n = a.rows;
    for (double jitter = 0.0; ; jitter = jitter == 0.0 ? 1e-12 : jitter * 100) {
        Matrix aj = a;
        for (size_t j = 0; j < n; ++j) aj.at(j, j) += jitter;
        std::vector<double> variances(n, 0.0);
        bool ok = true;
        for (size_t j = 0; ok && j < n; ++j) {
            std::vector<double> e(n, 0.0);
            e[j] = 1.0;
            std::vector<double> col;
            ok = cholesky_solve(aj, e, col);
            if (ok) variances[j] = col[j];
        }
        if (ok) return variances;
        if (jitter > 1.0) return std::vector<double>(n, std::numeric_limits<double>::infinity());
    }
}

// Modified Gram-Schmidt rank check. Throws naming the first column that is
// numerically dependent on the ones before it.
inline void check_full_rank(const Matrix& x, std::span<const char* const> names) {
    std::vector<std::vector<double>> basis;
    for (size_t j = 0; j < x.cols; ++j) {
        std::vector<double> col(x.rows);
        double norm0 = 0.0;
        for (size_t i = 0; i < x.rows; ++i) {
            col[i] = x.at(i, j);
            norm0 += col[i] * col[i];
        }
        norm0 = std::sqrt(norm0);
        for (const auto& q : basis) {
            double dot = 0.0;
            for (size_t i = 0; i < x.rows; ++i) dot += q[i] * col[i];
            for (size_t i = 0; i < x.rows; ++i) col[i] -= dot * q[i];
        }
        double norm = 0.0;
        for (double v : col) norm += v * v;
        norm = std::sqrt(norm);
        if (norm <= 1e-8 * std::max(norm0, 1e-300) || norm0 == 0.0) {
            const std::string name =
                j < names.size() ? names[j] : "column " + std::to_string(j);
            throw CollinearityError("design matrix is rank deficient: column '" + name +
                                    "' is linearly dependent on earlier columns");
        }
        for (auto& v : col) v /= norm;
        basis.push_back(std::move(col));
    }
}

}  // namespace detail

// Maximum-likelihood logistic regression by iteratively reweighted least
// squares with step halving. Standard errors come from the inverse Fisher
// information at the optimum. Separation is flagged, never fatal; a
// single-class outcome or a rank-deficient design throws.
inline FitResult fit_logistic(const Matrix& x, const std::vector<double>& y,
                              const FitOptions& options = {},
                              std::span<const char* const> column_names = kDesignColumnNames) {
    if (x.rows != y.size()) throw ArgumentError("design and outcome sizes differ");
    if (x.rows < 2) throw ArgumentError("logistic fit needs at least 2 rows");
    const double y_sum = std::accumulate(y.begin(), y.end(), 0.0);
    if (y_sum == 0.0 || y_sum == static_cast<double>(y.size())) {
        throw DegenerateDataError("outcome has a single class; logistic fit is degenerate");
    }
    detail::check_full_rank(x, column_names);

    const size_t p = x.cols;
    FitResult fit;
    fit.coefficients.assign(p, 0.0);
    std::vector<double> mu(x.rows), grad(p), delta;
    double ll = detail::log_likelihood_at(x, y, fit.coefficients);
    if (options.record_trace) fit.log_likelihood_trace.push_back(ll);

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        fit.iterations = iter;
        for (size_t i = 0; i < x.rows; ++i) {
            double eta = 0.0;
            for (size_t j = 0; j < p; ++j) eta += x.at(i, j) * fit.coefficients[j];
            mu[i] = sigmoid(eta);
        }
        std::fill(grad.begin(), grad.end(), 0.0);
        Matrix info(p, p);
        for (size_t i = 0; i < x.rows; ++i) {
            const double r = y[i] - mu[i];
            const double w = mu[i] * (1.0 - mu[i]);
            for (size_t j = 0; j < p; ++j) {
                grad[j] += x.at(i, j) * r;
                for (size_t k = j; k < p; ++k) info.at(j, k) += w * x.at(i, j) * x.at(i, k);
            }
        }
        for (size_t j = 0; j < p; ++j) {
            for (size_t k = 0; k < j; ++k) info.at(j, k) = info.at(k, j);
            info.at(j, j) += options.ridge;
        }
        if (!detail::cholesky_solve(info, grad, delta)) {
            fit.separation = true;
            break;
        }

        // Step halving keeps the log-likelihood non-decreasing.
        double step = 1.0;
        double ll_new = ll;
        bool accepted = false;
        std::vector<double> trial(p);
        for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
            for (size_t j = 0; j < p; ++j) trial[j] = fit.coefficients[j] + step * delta[j];
            ll_new = detail::log_likelihood_at(x, y, trial);
            if (ll_new >= ll - 1e-12) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {  // no usable ascent step left: treat as stationary
            fit.converged = true;
            break;
        }
        double max_change = 0.0;
        for (size_t j = 0; j < p; ++j) {
            max_change = std::max(max_change, std::fabs(trial[j] - fit.coefficients[j]));
        }
        fit.coefficients = trial;
        ll = std::max(ll, ll_new);
        if (options.record_trace) fit.log_likelihood_trace.push_back(ll);

        if (max_change < options.tolerance) {
            fit.converged = true;
            break;
        }
        const bool diverging =
            std::any_of(fit.coefficients.begin(), fit.coefficients.end(), [&](double w) {
                return std::fabs(w) > options.separation_threshold;
            });
        if (diverging) {
            fit.separation = true;
            break;
        }
    }

    fit.log_likelihood = ll;
    Matrix info(p, p);
    for (size_t i = 0; i < x.rows; ++i) {
        double eta = 0.0;
        for (size_t j = 0; j < p; ++j) eta += x.at(i, j) * fit.coefficients[j];
        const double m = sigmoid(eta);
        const double w = m * (1.0 - m);
        for (size_t j = 0; j < p; ++j) {
            for (size_t k = j; k < p; ++k) info.at(j, k) += w * x.at(i, j) * x.at(i, k);
        }
    }
    for (size_t j = 0; j < p; ++j) {
        for (size_t k = 0; k < j; ++k) info.at(j, k) = info.at(k, j);
    }
    const auto variances = detail::inverse_diagonal(info);
    fit.standard_errors.resize(p);
    fit.z_scores.resize(p);
    fit.p_values.resize(p);
    for (size_t j = 0; j < p; ++j) {
        fit.standard_errors[j] = std::sqrt(std::max(variances[j], 0.0));
        fit.z_scores[j] = fit.standard_errors[j] > 0
                              ? fit.coefficients[j] / fit.standard_errors[j]
                              : 0.0;
        fit.p_values[j] = fit.standard_errors[j] > 0
                              ? wald_p_value(fit.coefficients[j], fit.standard_errors[j])
                              : 1.0;
    }
    return fit;
}

inline FitResult fit(const std::vector<RegressionRow>& rows, const FitOptions& options = {}) {
    const auto design = build_design(rows);
    return fit_logistic(design.x, design.y, options);
}

inline double predict_probability(const FitResult& fit, std::span<const double> features) {
    if (features.size() != fit.coefficients.size()) {
        throw ArgumentError("feature vector length " + std::to_string(features.size()) +
                            " does not match coefficient count " +
                            std::to_string(fit.coefficients.size()));
    }
    double eta = 0.0;
    for (size_t j = 0; j < features.size(); ++j) eta += features[j] * fit.coefficients[j];
    return sigmoid(eta);
}

// Step 3 for one candidate itemset: assemble the matched rows, fit the
// six-column interaction model, keep going on degenerate designs.
inline FitResult evaluate_candidate(const Itemset& x, const std::vector<Selection>& selection,
                                    const StudyDefinition& study,
                                    const FitOptions& options = {}) {
    const auto rows = assemble_rows(selection, x, study);
    try {
        return fit(rows, options);
    } catch (const CollinearityError&) {
        FitResult degenerate;
        degenerate.collinear = true;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        degenerate.coefficients.assign(kDesignColumns, nan);
        degenerate.standard_errors.assign(kDesignColumns, nan);
        degenerate.z_scores.assign(kDesignColumns, nan);
        degenerate.p_values.assign(kDesignColumns, nan);
        return degenerate;
    }
}

}  // namespace ccsm
