#pragma once

// Thurstone regression factor scores and product-moment correlations
// among factor scores and the frailty index.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frailtyfa/corr.hpp"
#include "frailtyfa/errors.hpp"
#include "frailtyfa/findex.hpp"
#include "frailtyfa/ingest.hpp"
#include "frailtyfa/rotate.hpp"

namespace frailtyfa {

struct ScoreMatrix {
    Eigen::MatrixXd scores;  // N x k
    Eigen::MatrixXd weights; // p x k
    std::string method = "thurstone-regression";
    std::size_t all_missing_rows = 0;
};

// Column-standardizes the deficit matrix using each column's observed
// cases (SD with n - 1); missing cells become 0 (the column mean).
inline Eigen::MatrixXd standardized_deficits(const DeficitMatrix& m) {
    const auto n = static_cast<Eigen::Index>(m.rows()), p = static_cast<Eigen::Index>(m.cols());
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        double sum = 0.0, sum_sq = 0.0;
        std::size_t obs = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Deficit d = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            if (is_missing(d)) continue;
            const double v = d == Deficit::present ? 1.0 : 0.0;
            sum += v;
            sum_sq += v * v;
            ++obs;
        }
        if (obs < 2) throw ConstantInput("scores", "column " + std::to_string(j + 1) + " has fewer than 2 observations");
        const double mean = sum / static_cast<double>(obs);
        const double var = (sum_sq - static_cast<double>(obs) * mean * mean) / static_cast<double>(obs - 1);
        if (!(var > 0.0)) throw ConstantInput("scores", "column " + std::to_string(j + 1) + " is constant");
        const double sd = std::sqrt(var);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Deficit d = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            if (!is_missing(d)) z(i, j) = ((d == Deficit::present ? 1.0 : 0.0) - mean) / sd;
        }
    }
    return z;
}

// W = C^-1 (Lambda Phi); scores = Z W.
inline ScoreMatrix regression_scores(const Eigen::MatrixXd& z, const CorrMatrix& c, const RotatedSolution& rot) {
    if (z.cols() != c.size() || rot.pattern.rows() != c.size())
        throw SchemaError("scores", "deficit matrix, correlation matrix and loadings disagree in p");
    Eigen::LLT<Eigen::MatrixXd> llt(c.r);
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("scores", "correlation matrix is not invertible; smooth it or drop variables");
    const Eigen::MatrixXd structure = rot.pattern * rot.phi;
    ScoreMatrix out;
    out.weights = llt.solve(structure);
    if (!out.weights.allFinite())
        throw SingularMatrix("scores", "correlation matrix is numerically singular");
    out.scores = z * out.weights;
    for (Eigen::Index i = 0; i < z.rows(); ++i) out.all_missing_rows += z.row(i).isZero(0.0);
    return out;
}

inline ScoreMatrix regression_scores(const DeficitMatrix& m, const CorrMatrix& c, const RotatedSolution& rot) {
    ScoreMatrix out = regression_scores(standardized_deficits(m), c, rot);
    out.all_missing_rows = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        bool all = true;
        for (std::size_t j = 0; j < m.cols() && all; ++j) all = is_missing(m(i, j));
        out.all_missing_rows += all;
    }
    return out;
}

// Product-moment correlation. Throws ConstantInput for a constant input.
inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw SchemaError("scores", "pearson inputs differ in length");
    if (x.size() < 3) throw InsufficientData("scores", "pearson needs at least 3 pairs");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw ConstantInput("scores", "pearson input is constant");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// (k+1) x (k+1) correlation matrix over F1..Fk and the frailty index.
inline Eigen::MatrixXd score_correlation_report(const ScoreMatrix& s, const std::vector<FrailtyResult>& fi) {
    const Eigen::Index n = s.scores.rows(), k = s.scores.cols();
    if (static_cast<std::size_t>(n) != fi.size())
        throw SchemaError("scores", "score rows and frailty results are not aligned");
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(k + 1), std::vector<double>(static_cast<std::size_t>(n)));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = s.scores(i, j);
        cols[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = fi[static_cast<std::size_t>(i)].fi;
    }
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(k + 1, k + 1);
    for (Eigen::Index a = 0; a <= k; ++a)
        for (Eigen::Index b = 0; b < a; ++b)
            r(a, b) = r(b, a) = pearson(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
    return r;
}

} // namespace frailtyfa
