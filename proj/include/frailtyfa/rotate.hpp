#pragma once

// Oblique oblimin rotation by the gradient projection algorithm (GPA) and
// the salience / factor-adequacy rules applied to the rotated pattern.
//
// With unrotated loadings A and an oblique transform T (unit-length
// columns) the pattern is L = A T^-T and the factor correlations are
// Phi = T^T T, so L Phi L^T = A A^T for every admissible T.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frailtyfa/detail/parallel.hpp"
#include "frailtyfa/efa.hpp"
#include "frailtyfa/errors.hpp"

namespace frailtyfa {

// Oblimin criterion summed over ordered factor pairs j != l:
//   Q = sum_i sum_{j!=l} L_ij^2 L_il^2 - (gamma/p) sum_{j!=l} (sum_i L_ij^2)(sum_i L_il^2)
// gamma = 0 is quartimin.
inline double oblimin_value(const Eigen::MatrixXd& pattern, double gamma = 0.0) {
    const Eigen::MatrixXd sq = pattern.array().square().matrix();
    const Eigen::Index k = sq.cols();
    const Eigen::MatrixXd off = Eigen::MatrixXd::Ones(k, k) - Eigen::MatrixXd::Identity(k, k);
    Eigen::MatrixXd centered = sq;
    if (gamma != 0.0) centered.rowwise() -= (gamma / static_cast<double>(sq.rows())) * sq.colwise().sum();
    return (sq.array() * (centered * off).array()).sum();
}

inline double quartimin_value(const Eigen::MatrixXd& pattern) { return oblimin_value(pattern, 0.0); }

// dQ/dL for oblimin_value.
inline Eigen::MatrixXd oblimin_gradient(const Eigen::MatrixXd& pattern, double gamma = 0.0) {
    const Eigen::MatrixXd sq = pattern.array().square().matrix();
    const Eigen::Index k = sq.cols();
    const Eigen::MatrixXd off = Eigen::MatrixXd::Ones(k, k) - Eigen::MatrixXd::Identity(k, k);
    Eigen::MatrixXd centered = sq;
    if (gamma != 0.0) centered.rowwise() -= (gamma / static_cast<double>(sq.rows())) * sq.colwise().sum();
    return 4.0 * (pattern.array() * (centered * off).array()).matrix();
}

struct ObliminOptions {
    double gamma = 0.0;
    double tol = 1e-5;
    std::size_t max_iter = 1000;
    std::size_t restarts = 10; // start 0 is the identity, the rest are random
    std::uint64_t seed = 0;
};

struct RotatedSolution {
    Eigen::MatrixXd pattern;   // p x k
    Eigen::MatrixXd phi;       // k x k
    Eigen::MatrixXd structure; // pattern * phi
    Eigen::MatrixXd transform; // T
    double criterion = 0.0;
    double start_criterion = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    std::size_t restart = 0;
    std::vector<double> criterion_trace;
};

namespace detail {

inline Eigen::MatrixXd normalize_columns(Eigen::MatrixXd t) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) t.col(j) /= t.col(j).norm();
    return t;
}

inline Eigen::MatrixXd pattern_for(const Eigen::MatrixXd& a, const Eigen::MatrixXd& t) {
    return a * t.inverse().transpose();
}

// One GPA run from start transform t0. Every accepted step lowers the
// criterion; when no step size gives a decrease the run stops unconverged.
inline RotatedSolution gpa_oblique(const Eigen::MatrixXd& a, Eigen::MatrixXd t, const ObliminOptions& opts) {
    RotatedSolution out;
    Eigen::MatrixXd l = pattern_for(a, t);
    double f = oblimin_value(l, opts.gamma);
    out.start_criterion = f;
    out.criterion_trace.push_back(f);

    auto gradient_t = [&](const Eigen::MatrixXd& lm, const Eigen::MatrixXd& tm) {
        const Eigen::MatrixXd gq = oblimin_gradient(lm, opts.gamma);
        return Eigen::MatrixXd(-(lm.transpose() * gq * tm.inverse()).transpose());
    };
    Eigen::MatrixXd g = gradient_t(l, t);
    double step = 1.0;
    for (out.iterations = 0; out.iterations <= opts.max_iter; ++out.iterations) {
        const Eigen::RowVectorXd tg = (t.array() * g.array()).colwise().sum();
        const Eigen::MatrixXd gp = g - t * tg.asDiagonal();
        const double s = gp.norm();
        if (s < opts.tol) {
            out.converged = true;
            break;
        }
        if (out.iterations == opts.max_iter) break;
        step *= 2.0;
        bool accepted = false;
        Eigen::MatrixXd t_new, l_new;
        double f_new = f;
        for (int half = 0; half <= 10; ++half) {
            t_new = normalize_columns(t - step * gp);
            l_new = pattern_for(a, t_new);
            f_new = oblimin_value(l_new, opts.gamma);
            if (f - f_new > 0.5 * s * s * step) {
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if (!accepted && !(f_new < f)) break; // no descent available
        t = std::move(t_new);
        l = std::move(l_new);
        f = f_new;
        g = gradient_t(l, t);
        out.criterion_trace.push_back(f);
    }
    out.transform = t;
    out.pattern = l;
    out.criterion = f;
    return out;
}

// Sign: pattern columns sum >= 0. Order: descending structure sum of squares.
inline void apply_conventions(RotatedSolution& s) {
    const Eigen::Index k = s.pattern.cols();
    s.phi = s.transform.transpose() * s.transform;
    for (Eigen::Index j = 0; j < k; ++j) {
        if (s.pattern.col(j).sum() < 0) {
            s.pattern.col(j) *= -1.0;
            s.transform.col(j) *= -1.0;
            s.phi.row(j) *= -1.0;
            s.phi.col(j) *= -1.0;
        }
    }
    const Eigen::MatrixXd st = s.pattern * s.phi;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) order[static_cast<std::size_t>(j)] = j;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
        return st.col(x).squaredNorm() > st.col(y).squaredNorm();
    });
    Eigen::MatrixXd pattern(s.pattern.rows(), k), transform(k, k), phi(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index oj = order[static_cast<std::size_t>(j)];
        pattern.col(j) = s.pattern.col(oj);
        transform.col(j) = s.transform.col(oj);
        for (Eigen::Index l = 0; l < k; ++l) phi(j, l) = s.phi(oj, order[static_cast<std::size_t>(l)]);
    }
    s.pattern = std::move(pattern);
    s.transform = std::move(transform);
    s.phi = 0.5 * (phi + phi.transpose());
    s.phi.diagonal().setOnes();
    s.structure = s.pattern * s.phi;
}

} // namespace detail

// Oblimin rotation of unrotated loadings. Runs `restarts` GPA starts (the
// identity, then random column-normalized transforms seeded from
// mix_seed(seed, r)) and keeps the lowest criterion; ties go to the
// earliest start.
inline RotatedSolution oblimin_rotate(const Eigen::MatrixXd& loadings, const ObliminOptions& opts = {}) {
    const Eigen::Index k = loadings.cols();
    if (k < 1) throw SchemaError("rotate", "need at least one factor");
    if (k == 1) {
        RotatedSolution s;
        s.pattern = loadings;
        s.transform = Eigen::MatrixXd::Ones(1, 1);
        s.criterion = s.start_criterion = oblimin_value(loadings, opts.gamma);
        s.criterion_trace = {s.criterion};
        s.converged = true;
        detail::apply_conventions(s);
        return s;
    }
    const std::size_t starts = std::max<std::size_t>(1, opts.restarts);
    std::vector<RotatedSolution> runs(starts);
    detail::parallel_for(starts, [&](std::size_t r) {
        Eigen::MatrixXd t0 = Eigen::MatrixXd::Identity(k, k);
        if (r > 0) {
            std::mt19937_64 rng(detail::mix_seed(opts.seed, r));
            std::normal_distribution<double> z;
            for (Eigen::Index j = 0; j < k; ++j)
                for (Eigen::Index i = 0; i < k; ++i) t0(i, j) = z(rng);
            t0 = detail::normalize_columns(t0);
        }
        runs[r] = detail::gpa_oblique(loadings, t0, opts);
        runs[r].restart = r;
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < starts; ++r) {
        const double scale = std::max(1.0, std::abs(runs[best].criterion));
        if (!std::isfinite(runs[best].criterion) ||
            runs[r].criterion < runs[best].criterion - 1e-10 * scale)
            best = r;
    }
    RotatedSolution s = std::move(runs[best]);
    s.start_criterion = runs[0].start_criterion; // criterion of the unrotated loadings
    detail::apply_conventions(s);
    return s;
}

inline RotatedSolution oblimin_rotate(const UnrotatedSolution& unrotated, const ObliminOptions& opts = {}) {
    return oblimin_rotate(unrotated.loadings, opts);
}

struct SalientItem {
    std::size_t index = 0;
    std::string id;
    double loading = 0.0;
};

struct FactorSalience {
    std::vector<SalientItem> items;
    bool adequate = false;
};

struct SalienceReport {
    double threshold = 0.20;
    std::size_t min_items = 3;
    std::vector<FactorSalience> factors;
};

// Salient means |loading| strictly greater than threshold; a factor is
// adequate with at least min_items salient pattern coefficients.
inline SalienceReport salience(const Eigen::MatrixXd& pattern, const std::vector<std::string>& ids = {},
                               double threshold = 0.20, std::size_t min_items = 3) {
    SalienceReport rep;
    rep.threshold = threshold;
    rep.min_items = min_items;
    for (Eigen::Index j = 0; j < pattern.cols(); ++j) {
        FactorSalience f;
        for (Eigen::Index i = 0; i < pattern.rows(); ++i) {
            const double v = pattern(i, j);
            if (v > threshold || v < -threshold) {
                const auto idx = static_cast<std::size_t>(i);
                f.items.push_back({idx, idx < ids.size() ? ids[idx] : "V" + std::to_string(i + 1), v});
            }
        }
        f.adequate = f.items.size() >= min_items;
        rep.factors.push_back(std::move(f));
    }
    return rep;
}

} // namespace frailtyfa
