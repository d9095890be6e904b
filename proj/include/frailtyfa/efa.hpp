#pragma once

// Eigen-analysis, Horn's parallel analysis and minres (unweighted least
// squares) factor extraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "frailtyfa/corr.hpp"
#include "frailtyfa/detail/parallel.hpp"
#include "frailtyfa/errors.hpp"

namespace frailtyfa {

struct SymmetricEigen {
    Eigen::VectorXd values;  // descending
    Eigen::MatrixXd vectors; // columns match values
};

inline constexpr double kEigenReconstructionTol = 1e-8;

// Full eigendecomposition of a symmetric matrix, sorted descending. Throws
// ConvergenceFailure if the solver fails or the reconstruction check
// max|Q diag(v) Q^T - C| < 1e-8 does not hold.
inline SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& c, bool check = true) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    if (es.info() != Eigen::Success) throw ConvergenceFailure("efa", "symmetric eigensolver did not converge");
    const Eigen::Index p = c.rows();
    SymmetricEigen out;
    out.values = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
    if (check && p > 0) {
        const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
        const double err =
            (out.vectors * out.values.asDiagonal() * out.vectors.transpose() - c).cwiseAbs().maxCoeff();
        if (err >= kEigenReconstructionTol * scale)
            throw ConvergenceFailure("efa", "eigen reconstruction error " + std::to_string(err));
    }
    return out;
}

inline Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& c) { return symmetric_eigen(c).values; }
inline Eigen::VectorXd eigenvalues(const CorrMatrix& c) { return eigenvalues(c.r); }

// Null model for the random eigenvalues in parallel analysis.
enum class NullModel {
    normal, // independent standard normal columns
    binary, // independent Bernoulli columns with matched prevalences
};

struct ParallelOptions {
    std::size_t replicates = 100;
    double quantile = 0.95;
    std::uint64_t seed = 0;
    NullModel null_model = NullModel::normal;
    std::vector<double> prevalences; // required for NullModel::binary
};

struct ParallelResult {
    Eigen::VectorXd observed;  // descending
    Eigen::VectorXd threshold; // per-rank empirical quantile of null eigenvalues
    std::size_t replicates = 0;
    double quantile = 0.0;
    std::size_t suggested_k = 0;
};

namespace detail {

// Sample quantile with linear interpolation between order statistics
// (Hyndman-Fan type 7). `v` is sorted in place.
inline double quantile_type7(std::vector<double>& v, double q) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline Eigen::MatrixXd correlation_of_columns(Eigen::MatrixXd x) {
    const auto n = static_cast<double>(x.rows());
    x.rowwise() -= x.colwise().mean();
    Eigen::MatrixXd cov = x.transpose() * x / (n - 1.0);
    Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = sd(i) > 0 && sd(j) > 0 ? cov(i, j) / (sd(i) * sd(j)) : 0.0;
            r(i, j) = r(j, i) = v;
        }
    return r;
}

} // namespace detail

inline std::size_t suggested_factor_count(const Eigen::VectorXd& observed, const Eigen::VectorXd& threshold) {
    std::size_t k = 0;
    while (k < static_cast<std::size_t>(observed.size()) &&
           observed(static_cast<Eigen::Index>(k)) > threshold(static_cast<Eigen::Index>(k)))
        ++k;
    return k;
}

// Horn's parallel analysis. Replicate r draws its data from an RNG seeded
// with mix_seed(seed, r), so output is identical for any thread schedule.
inline ParallelResult parallel_analysis(std::size_t n, std::size_t p, const Eigen::VectorXd& observed,
                                        const ParallelOptions& opts = {}) {
    if (n <= p) throw InsufficientData("efa", "parallel analysis needs n > p");
    if (static_cast<std::size_t>(observed.size()) != p)
        throw SchemaError("efa", "observed eigenvalue vector has length " + std::to_string(observed.size()) +
                                     ", expected " + std::to_string(p));
    if (opts.replicates == 0) throw SchemaError("efa", "parallel analysis needs at least one replicate");
    if (!(opts.quantile > 0.0 && opts.quantile < 1.0)) throw SchemaError("efa", "quantile must lie in (0, 1)");
    if (opts.null_model == NullModel::binary && opts.prevalences.size() != p)
        throw SchemaError("efa", "binary null model needs one prevalence per variable");

    const auto rows = static_cast<Eigen::Index>(n), cols = static_cast<Eigen::Index>(p);
    std::vector<Eigen::VectorXd> eigs(opts.replicates);
    detail::parallel_for(opts.replicates, [&](std::size_t r) {
        std::mt19937_64 rng(detail::mix_seed(opts.seed, r));
        Eigen::MatrixXd x(rows, cols);
        if (opts.null_model == NullModel::normal) {
            std::normal_distribution<double> z;
            for (Eigen::Index j = 0; j < cols; ++j)
                for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = z(rng);
        } else {
            std::uniform_real_distribution<double> u;
            for (Eigen::Index j = 0; j < cols; ++j)
                for (Eigen::Index i = 0; i < rows; ++i)
                    x(i, j) = u(rng) < opts.prevalences[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
        }
        eigs[r] = symmetric_eigen(detail::correlation_of_columns(std::move(x)), false).values;
    });

    ParallelResult res;
    res.observed = observed;
    std::sort(res.observed.data(), res.observed.data() + res.observed.size(), std::greater<>());
    res.threshold.resize(cols);
    res.replicates = opts.replicates;
    res.quantile = opts.quantile;
    std::vector<double> column(opts.replicates);
    for (Eigen::Index k = 0; k < cols; ++k) {
        for (std::size_t r = 0; r < opts.replicates; ++r) column[r] = eigs[r](k);
        res.threshold(k) = detail::quantile_type7(column, opts.quantile);
    }
    res.suggested_k = suggested_factor_count(res.observed, res.threshold);
    return res;
}

struct MinresOptions {
    double tol = 1e-9;
    std::size_t max_iter = 1000;
    double lower = 0.001;
    double upper = 1.0;
    double fixed_point_tol = 1e-7; // max |psi - (1 - h2)| at convergence
};

struct UnrotatedSolution {
    Eigen::MatrixXd loadings;      // p x k
    Eigen::VectorXd uniquenesses;  // psi
    Eigen::VectorXd communalities; // 1 - psi
    double objective = 0.0;
    bool converged = false;
    bool heywood = false;
    std::size_t iterations = 0;
    std::vector<double> objective_trace; // value after each accepted step
};

namespace detail {

struct MinresState {
    Eigen::MatrixXd loadings;
    double objective = 0.0;
};

// Lambda = top-k eigenpairs of (C - diag psi), negative eigenvalues
// truncated at zero; objective = sum over i<j of squared residuals.
inline MinresState minres_evaluate(const Eigen::MatrixXd& c, const Eigen::VectorXd& psi, Eigen::Index k) {
    Eigen::MatrixXd reduced = c;
    reduced.diagonal() -= psi;
    const auto eig = symmetric_eigen(reduced, false);
    MinresState s;
    s.loadings = eig.vectors.leftCols(k) * eig.values.head(k).cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const Eigen::MatrixXd resid = c - s.loadings * s.loadings.transpose();
    double f = 0.0;
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        for (Eigen::Index i = 0; i < j; ++i) f += resid(i, j) * resid(i, j);
    s.objective = f;
    return s;
}

inline Eigen::VectorXd smc_start(const Eigen::MatrixXd& c, double lower, double upper) {
    const Eigen::Index p = c.rows();
    Eigen::VectorXd psi(p);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
    Eigen::VectorXd diag_inv;
    bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (ok) {
        diag_inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p)).diagonal();
        ok = diag_inv.allFinite() && (diag_inv.array() > 0).all();
    }
    for (Eigen::Index i = 0; i < p; ++i) {
        if (ok) {
            psi(i) = 1.0 / diag_inv(i); // 1 - SMC
        } else {
            double m = 0.0;
            for (Eigen::Index j = 0; j < p; ++j)
                if (j != i) m = std::max(m, std::abs(c(i, j)));
            psi(i) = 1.0 - m * m;
        }
    }
    return psi.cwiseMax(lower).cwiseMin(upper);
}

} // namespace detail

// Minres extraction. Each step moves psi toward the communality update
// psi' = diag(C - Lambda Lambda^T) (clipped to [lower, upper]); that update
// never increases the objective, and longer extrapolated steps are tried
// first and kept only when they lower it further. Converged once the last
// step improved the objective by less than tol and psi sits at the
// communality fixed point (the objective is too flat near the optimum to
// pin psi down on its own).
inline UnrotatedSolution extract_minres(const CorrMatrix& corr, std::size_t k, const MinresOptions& opts = {}) {
    const Eigen::MatrixXd& c = corr.r;
    const Eigen::Index p = c.rows();
    if (k < 1 || static_cast<Eigen::Index>(k) >= p)
        throw SchemaError("efa", "factor count must satisfy 1 <= k < p (k = " + std::to_string(k) +
                                     ", p = " + std::to_string(p) + ")");
    const auto kk = static_cast<Eigen::Index>(k);

    Eigen::VectorXd psi = detail::smc_start(c, opts.lower, opts.upper);
    auto state = detail::minres_evaluate(c, psi, kk);
    UnrotatedSolution sol;
    sol.objective_trace.push_back(state.objective);

    auto clip = [&](Eigen::VectorXd v) { return Eigen::VectorXd(v.cwiseMax(opts.lower).cwiseMin(opts.upper)); };
    double stretch = 1.0;
    double improvement = std::numeric_limits<double>::infinity();
    for (sol.iterations = 1; sol.iterations <= opts.max_iter; ++sol.iterations) {
        const Eigen::VectorXd model_diag = state.loadings.rowwise().squaredNorm();
        const Eigen::VectorXd step = clip(c.diagonal() - model_diag) - psi;
        if (improvement < opts.tol && step.cwiseAbs().maxCoeff() < opts.fixed_point_tol) {
            sol.converged = true;
            break;
        }

        Eigen::VectorXd best_psi = psi;
        detail::MinresState best = state;
        bool moved = false;
        for (double a = std::min(2.0 * stretch, 64.0); a >= 1.0; a /= 2.0) {
            Eigen::VectorXd trial_psi = clip(psi + a * step);
            auto trial = detail::minres_evaluate(c, trial_psi, kk);
            if (trial.objective < best.objective || (a == 1.0 && !moved && trial.objective <= state.objective)) {
                best = std::move(trial);
                best_psi = std::move(trial_psi);
                stretch = a;
                moved = true;
                break;
            }
        }
        improvement = state.objective - best.objective;
        if (!moved) {
            sol.converged = true;
            break;
        }
        psi = std::move(best_psi);
        state = std::move(best);
        sol.objective_trace.push_back(state.objective);
    }
    sol.iterations = std::min(sol.iterations, opts.max_iter);

    // sign: each column sums >= 0; order: descending sum of squares
    Eigen::MatrixXd lam = state.loadings;
    for (Eigen::Index j = 0; j < kk; ++j)
        if (lam.col(j).sum() < 0) lam.col(j) *= -1.0;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(kk));
    for (Eigen::Index j = 0; j < kk; ++j) order[static_cast<std::size_t>(j)] = j;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return lam.col(a).squaredNorm() > lam.col(b).squaredNorm();
    });
    sol.loadings.resize(p, kk);
    for (Eigen::Index j = 0; j < kk; ++j) sol.loadings.col(j) = lam.col(order[static_cast<std::size_t>(j)]);

    sol.uniquenesses = psi;
    sol.communalities = Eigen::VectorXd::Ones(p) - psi;
    sol.objective = state.objective;
    sol.heywood = (psi.array() <= opts.lower * (1.0 + 1e-12)).any();
    return sol;
}

// Residual fit is acceptable when RMSR <= kRmsrGate.
inline constexpr double kRmsrGate = 0.05;

struct FitStats {
    double rmsr = 0.0;
    Eigen::VectorXd eigenvalues_of_r;
    Eigen::VectorXd ss_loadings;
    Eigen::VectorXd prop_variance;
};

// Root mean square of the off-diagonal residuals C - model, over i < j.
inline double rmsr(const Eigen::MatrixXd& c, const Eigen::MatrixXd& model) {
    const Eigen::Index p = c.rows();
    if (p < 2) return 0.0;
    double s = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < j; ++i) {
            const double e = c(i, j) - model(i, j);
            s += e * e;
        }
    return std::sqrt(s / (static_cast<double>(p) * static_cast<double>(p - 1) / 2.0));
}

inline FitStats fit_stats(const CorrMatrix& c, const UnrotatedSolution& sol) {
    if (sol.loadings.rows() != c.size()) throw SchemaError("efa", "solution and matrix dimensions differ");
    FitStats f;
    f.rmsr = rmsr(c.r, sol.loadings * sol.loadings.transpose());
    f.eigenvalues_of_r = eigenvalues(c.r);
    f.ss_loadings = sol.loadings.colwise().squaredNorm().transpose();
    f.prop_variance = f.ss_loadings / static_cast<double>(c.size());
    return f;
}

} // namespace frailtyfa
