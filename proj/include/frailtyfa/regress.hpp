#pragma once

// Standardized multiple linear regression and model comparison.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "frailtyfa/errors.hpp"

namespace frailtyfa {

// z-scores with the n - 1 standard deviation.
inline std::vector<double> standardize(std::span<const double> x) {
    if (x.size() < 2) throw InsufficientData("regress", "standardize needs at least 2 values");
    const auto n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0)) throw ConstantInput("regress", "cannot standardize a constant variable");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / sd;
    return out;
}

// Two-sided p-value of a Student-t statistic (regularized incomplete beta).
inline double t_two_sided_p(double t, double df) {
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

inline double adjusted_r2(double r2, std::size_t n, std::size_t q) {
    return 1.0 - (1.0 - r2) * (static_cast<double>(n) - 1.0) / (static_cast<double>(n) - static_cast<double>(q) - 1.0);
}

struct Term {
    std::string name;
    double beta = 0.0;
    double se = 0.0;
    double t = 0.0;
    double p = 0.0;
};

struct RegressionFit {
    std::string outcome;
    std::vector<Term> terms; // intercept first
    double r2 = 0.0;
    double adj_r2 = 0.0;
    double residual_se = 0.0;
    std::size_t n_used = 0;
    std::size_t dropped_missing = 0;
    std::size_t df_residual = 0;
    std::uint64_t row_key = 0; // fingerprint of the rows used

    const Term* term(const std::string& name) const {
        for (const auto& t : terms)
            if (t.name == name) return &t;
        return nullptr;
    }
};

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xffu;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

// Ordinary least squares. `x` must contain the intercept column; rows with
// any non-finite value in x or y are dropped listwise and counted.
// Solved through a column-pivoted QR; rank deficiency names the
// columns that are linear combinations of the others.
inline RegressionFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                         std::string outcome = "y") {
    if (x.rows() != y.size()) throw SchemaError("regress", "design and outcome have different row counts");
    if (static_cast<std::size_t>(x.cols()) != names.size())
        throw SchemaError("regress", "one name per design column is required");

    std::vector<Eigen::Index> keep;
    std::uint64_t key = 0xcbf29ce484222325ULL;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (x.row(i).allFinite() && std::isfinite(y(i))) {
            keep.push_back(i);
            key = detail::fnv1a(key, static_cast<std::uint64_t>(i));
        }
    }
    const auto n = static_cast<Eigen::Index>(keep.size());
    const Eigen::Index cols = x.cols();
    const std::size_t q = static_cast<std::size_t>(cols) - 1;
    if (n <= cols)
        throw InsufficientData("regress", "need more than " + std::to_string(cols) + " complete rows, have " +
                                              std::to_string(n));
    Eigen::MatrixXd xu(n, cols);
    Eigen::VectorXd yu(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        xu.row(r) = x.row(keep[static_cast<std::size_t>(r)]);
        yu(r) = y(keep[static_cast<std::size_t>(r)]);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xu);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols) {
        std::string bad;
        for (Eigen::Index j = qr.rank(); j < cols; ++j) {
            if (!bad.empty()) bad += ", ";
            bad += names[static_cast<std::size_t>(qr.colsPermutation().indices()(j))];
        }
        throw RankDeficient("regress", "design is rank deficient; collinear column(s): " + bad);
    }
    const Eigen::VectorXd beta = qr.solve(yu);
    const Eigen::VectorXd resid = yu - xu * beta;
    const double ssr = resid.squaredNorm();
    const double sst = (yu.array() - yu.mean()).square().sum();

    RegressionFit fit;
    fit.outcome = std::move(outcome);
    fit.n_used = static_cast<std::size_t>(n);
    fit.dropped_missing = static_cast<std::size_t>(x.rows() - n);
    fit.df_residual = static_cast<std::size_t>(n - cols);
    fit.row_key = key;
    fit.r2 = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 0.0;
    fit.adj_r2 = adjusted_r2(fit.r2, fit.n_used, q);
    const double sigma2 = ssr / static_cast<double>(fit.df_residual);
    fit.residual_se = std::sqrt(sigma2);

    // (X^T X)^-1 = P R^-1 R^-T P^T
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(cols, cols).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(cols, cols));
    const Eigen::MatrixXd xtx_inv_perm = r_inv * r_inv.transpose();
    const auto& perm = qr.colsPermutation();
    Eigen::VectorXd var(cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        // position of original column j in the pivoted order
        Eigen::Index pos = 0;
        while (perm.indices()(pos) != j) ++pos;
        var(j) = sigma2 * xtx_inv_perm(pos, pos);
    }

    for (Eigen::Index j = 0; j < cols; ++j) {
        Term t;
        t.name = names[static_cast<std::size_t>(j)];
        t.beta = beta(j);
        t.se = std::sqrt(std::max(0.0, var(j)));
        if (t.se > 0.0) t.t = t.beta / t.se;
        else t.t = t.beta == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                 : std::copysign(std::numeric_limits<double>::infinity(), t.beta);
        t.p = t_two_sided_p(t.t, static_cast<double>(fit.df_residual));
        fit.terms.push_back(std::move(t));
    }
    return fit;
}

struct Predictor {
    std::string name;
    std::vector<double> values; // NaN marks missing
};

// Listwise-deletes rows with any missing value, standardizes the outcome
// and every predictor over the rows kept, then fits with an intercept.
inline RegressionFit standardized_ols(const std::string& outcome, const std::vector<double>& y,
                                      const std::vector<Predictor>& predictors) {
    const std::size_t n = y.size();
    for (const auto& p : predictors)
        if (p.values.size() != n) throw SchemaError("regress", "predictor '" + p.name + "' has the wrong length");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i) {
        bool ok = std::isfinite(y[i]);
        for (const auto& p : predictors) ok = ok && std::isfinite(p.values[i]);
        if (ok) keep.push_back(i);
    }
    if (keep.size() < predictors.size() + 2)
        throw InsufficientData("regress", "too few complete rows for a standardized fit");
    auto take = [&](const std::vector<double>& v) {
        std::vector<double> out;
        out.reserve(keep.size());
        for (auto i : keep) out.push_back(v[i]);
        return standardize(out);
    };
    const auto m = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd x(m, static_cast<Eigen::Index>(predictors.size() + 1));
    x.col(0).setOnes();
    std::vector<std::string> names{"(Intercept)"};
    for (std::size_t j = 0; j < predictors.size(); ++j) {
        const auto z = take(predictors[j].values);
        x.col(static_cast<Eigen::Index>(j + 1)) = Eigen::Map<const Eigen::VectorXd>(z.data(), m);
        names.push_back(predictors[j].name);
    }
    const auto zy = take(y);
    RegressionFit fit = ols(x, Eigen::Map<const Eigen::VectorXd>(zy.data(), m), names, outcome);
    fit.dropped_missing = n - keep.size();
    std::uint64_t key = 0xcbf29ce484222325ULL;
    for (auto i : keep) key = detail::fnv1a(key, i);
    fit.row_key = key;
    return fit;
}

struct ModelComparison {
    double r2_1 = 0.0, adj_r2_1 = 0.0;
    double r2_2 = 0.0, adj_r2_2 = 0.0;
    double delta_r2 = 0.0;     // model 2 - model 1
    double delta_adj_r2 = 0.0; // model 2 - model 1
    int winner = 0;            // 1 or 2 by adjusted R^2, 0 on a tie
    std::size_t n_used = 0;
};

inline ModelComparison compare_models(const RegressionFit& m1, const RegressionFit& m2) {
    if (m1.outcome != m2.outcome || m1.n_used != m2.n_used || m1.row_key != m2.row_key)
        throw CohortMismatch("regress", "models were fitted to different outcomes or rows");
    ModelComparison c;
    c.r2_1 = m1.r2;
    c.adj_r2_1 = m1.adj_r2;
    c.r2_2 = m2.r2;
    c.adj_r2_2 = m2.adj_r2;
    c.delta_r2 = m2.r2 - m1.r2;
    c.delta_adj_r2 = m2.adj_r2 - m1.adj_r2;
    c.winner = c.delta_adj_r2 > 0 ? 2 : c.delta_adj_r2 < 0 ? 1 : 0;
    c.n_used = m1.n_used;
    return c;
}

} // namespace frailtyfa
