#pragma once

// Phi correlations between binary deficits with pairwise deletion,
// eigenvalue-clipping PSD smoothing, and factorability diagnostics
// (Bartlett's sphericity test, Kaiser-Meyer-Olkin).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include "frailtyfa/errors.hpp"
#include "frailtyfa/ingest.hpp"

namespace frailtyfa {

// Phi coefficient of a 2x2 table. nullopt when either variable is constant
// (a zero margin), which callers must treat as a missing correlation.
inline std::optional<double> phi(std::uint64_t n11, std::uint64_t n10, std::uint64_t n01, std::uint64_t n00) {
    const double a = static_cast<double>(n11), b = static_cast<double>(n10);
    const double c = static_cast<double>(n01), d = static_cast<double>(n00);
    const double denom = (a + b) * (c + d) * (a + c) * (b + d);
    if (denom <= 0.0) return std::nullopt;
    return std::clamp((a * d - b * c) / std::sqrt(denom), -1.0, 1.0);
}

struct CorrMatrix {
    Eigen::MatrixXd r;
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> n_pairs;
    bool smoothed = false;
    double min_eig_before = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> ids;

    Eigen::Index size() const noexcept { return r.rows(); }
};

inline CorrMatrix make_corr(Eigen::MatrixXd r, std::int64_t n = 0) {
    CorrMatrix c;
    c.n_pairs = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Constant(r.rows(), r.cols(), n);
    c.r = std::move(r);
    for (Eigen::Index i = 0; i < c.r.rows(); ++i) c.ids.push_back("V" + std::to_string(i + 1));
    return c;
}

struct CorrOptions {
    std::size_t min_pairs = 30;
};

// Each entry uses only the rows complete for that pair. Result is not
// smoothed. A variable that is constant over a pair's complete cases is a
// hard error naming the variable.
inline CorrMatrix pairwise_phi_matrix(const DeficitMatrix& m, std::vector<std::string> ids = {},
                                      const CorrOptions& opts = {}) {
    const std::size_t n = m.rows(), p = m.cols();
    if (p < 2) throw SchemaError("corr", "need at least 2 variables, got " + std::to_string(p));
    if (ids.empty())
        for (std::size_t j = 0; j < p; ++j) ids.push_back("V" + std::to_string(j + 1));
    if (ids.size() != p) throw SchemaError("corr", "id count does not match column count");

    // column-major copy: -1 missing, 0, 1
    std::vector<std::int8_t> col(n * p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) col[j * n + i] = static_cast<std::int8_t>(m(i, j));

    CorrMatrix out;
    out.ids = std::move(ids);
    out.r = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    out.n_pairs.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) {
        std::int64_t obs = 0;
        for (std::size_t i = 0; i < n; ++i) obs += col[j * n + i] >= 0;
        out.n_pairs(j, j) = obs;
    }
    for (std::size_t j = 0; j < p; ++j) {
        const std::int8_t* x = &col[j * n];
        for (std::size_t l = j + 1; l < p; ++l) {
            const std::int8_t* y = &col[l * n];
            std::uint64_t t[2][2] = {{0, 0}, {0, 0}};
            for (std::size_t i = 0; i < n; ++i)
                if (x[i] >= 0 && y[i] >= 0) ++t[x[i]][y[i]];
            const std::uint64_t complete = t[0][0] + t[0][1] + t[1][0] + t[1][1];
            const std::string pair = "(" + out.ids[j] + ", " + out.ids[l] + ")";
            if (complete < opts.min_pairs)
                throw InsufficientOverlap("corr", "pair " + pair + " has " + std::to_string(complete) +
                                                      " complete cases, need " + std::to_string(opts.min_pairs));
            auto r = phi(t[1][1], t[1][0], t[0][1], t[0][0]);
            if (!r) {
                const bool x_const = t[1][0] + t[1][1] == 0 || t[0][0] + t[0][1] == 0;
                throw DegenerateMargin("corr", "variable '" + (x_const ? out.ids[j] : out.ids[l]) +
                                                   "' is constant over the complete cases of pair " + pair);
            }
            out.r(j, l) = out.r(l, j) = *r;
            out.n_pairs(j, l) = out.n_pairs(l, j) = static_cast<std::int64_t>(complete);
        }
    }
    return out;
}

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kClipFloor = 1e-6;

// Clips negative eigenvalues to kClipFloor and rescales back to a unit
// diagonal. PSD inputs are returned unchanged.
inline CorrMatrix smooth_psd(const CorrMatrix& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.r);
    if (es.info() != Eigen::Success) throw ConvergenceFailure("corr", "eigensolver failed while smoothing");
    CorrMatrix out = c;
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig >= -kPsdTolerance) return out;

    Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(kClipFloor);
    Eigen::MatrixXd a = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
    Eigen::VectorXd inv_sd = a.diagonal().cwiseSqrt().cwiseInverse();
    out.r = inv_sd.asDiagonal() * a * inv_sd.asDiagonal();
    out.r = 0.5 * (out.r + out.r.transpose());
    out.r.diagonal().setOnes();
    out.smoothed = true;
    out.min_eig_before = min_eig;
    return out;
}

struct FactorabilityReport {
    bool bartlett_defined = false;
    double bartlett_chi2 = std::numeric_limits<double>::quiet_NaN();
    double bartlett_df = 0.0;
    double bartlett_p = std::numeric_limits<double>::quiet_NaN();
    double kmo_overall = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd kmo_per_variable;
    std::vector<std::string> warnings;
};

// Bartlett: chi2 = -(n - 1 - (2p + 5)/6) ln det R with p(p-1)/2 df.
// KMO from anti-image (partial) correlations of R^-1. A singular matrix
// leaves both undefined and records a warning.
inline FactorabilityReport factorability(const CorrMatrix& c, std::size_t n) {
    const Eigen::Index p = c.size();
    FactorabilityReport rep;
    rep.bartlett_df = static_cast<double>(p) * static_cast<double>(p - 1) / 2.0;
    rep.kmo_per_variable = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.r, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
        rep.warnings.push_back("correlation matrix is singular; Bartlett and KMO undefined");
        return rep;
    }
    const double log_det = es.eigenvalues().array().log().sum();
    const double scale = static_cast<double>(n) - 1.0 - (2.0 * static_cast<double>(p) + 5.0) / 6.0;
    rep.bartlett_chi2 = std::max(0.0, -scale * log_det);
    rep.bartlett_defined = true;
    boost::math::chi_squared dist(rep.bartlett_df);
    rep.bartlett_p = rep.bartlett_chi2 <= 0.0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, rep.bartlett_chi2));

    if (static_cast<Eigen::Index>(n) <= p) rep.warnings.push_back("n <= p; KMO partial correlations are unstable");
    const Eigen::MatrixXd q = c.r.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    double r2_all = 0.0, a2_all = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        double r2 = 0.0, a2 = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (i == j) continue;
            const double a = -q(i, j) / std::sqrt(q(i, i) * q(j, j));
            r2 += c.r(i, j) * c.r(i, j);
            a2 += a * a;
        }
        rep.kmo_per_variable(i) = r2 + a2 > 0.0 ? r2 / (r2 + a2) : 0.0;
        r2_all += r2;
        a2_all += a2;
    }
    if (r2_all + a2_all > 0.0) {
        rep.kmo_overall = r2_all / (r2_all + a2_all);
    } else {
        rep.kmo_overall = 0.0;
        rep.warnings.push_back("no shared variance (diagonal matrix); KMO set to 0");
    }
    return rep;
}

} // namespace frailtyfa
