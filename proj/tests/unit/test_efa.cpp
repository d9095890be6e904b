#include <gtest/gtest.h>

#include <random>

#include "frailtyfa/efa.hpp"
#include "frailtyfa/synth.hpp"
#include "oracles.hpp"

using namespace frailtyfa;

namespace {

Eigen::MatrixXd model_corr(const Eigen::MatrixXd& lambda) {
    Eigen::MatrixXd r = lambda * lambda.transpose();
    r.diagonal().setOnes();
    return r;
}

Eigen::MatrixXd planted_pattern(int p, int k, double loading) {
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(p, k);
    for (int i = 0; i < p; ++i) l(i, i % k) = loading;
    return l;
}

} // namespace

TEST(Eigenvalues, Identity) {
    const auto v = eigenvalues(Eigen::MatrixXd::Identity(3, 3));
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(v(i), 1.0, 1e-14);
}

TEST(Eigenvalues, Equicorrelation) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(3, 3, 0.5);
    r.diagonal().setOnes();
    const auto v = eigenvalues(r);
    EXPECT_NEAR(v(0), 2.0, 1e-12);
    EXPECT_NEAR(v(1), 0.5, 1e-12);
    EXPECT_NEAR(v(2), 0.5, 1e-12);
}

TEST(Eigenvalues, RandomSymmetricMatchesDeterminantOracle) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 5; ++t) {
        Eigen::MatrixXd a(6, 6);
        std::vector<std::vector<double>> rows(6, std::vector<double>(6));
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = u(rng);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = a(i, j);
        const auto mine = eigenvalues(a);
        const auto ref = oracle::eigenvalues_by_det(rows);
        ASSERT_EQ(ref.size(), 6u);
        for (int i = 0; i < 6; ++i) EXPECT_NEAR(mine(i), ref[static_cast<std::size_t>(i)], 1e-8);
        for (int i = 1; i < 6; ++i) EXPECT_GE(mine(i - 1), mine(i));
    }
}

TEST(Eigenvalues, CorrelationEigenvaluesSumToP) {
    const auto c = model_corr(planted_pattern(10, 2, 0.6));
    EXPECT_NEAR(eigenvalues(c).sum(), 10.0, 1e-8);
}

TEST(ParallelAnalysis, PublishedEigenvaluesKeepFour) {
    Eigen::VectorXd obs = Eigen::VectorXd::Constant(58, 0.5);
    obs.head(4) << 10.9, 3.4, 2.4, 1.9;
    obs(4) = 1.05;
    Eigen::VectorXd thr = Eigen::VectorXd::Constant(58, 1.2);
    EXPECT_EQ(suggested_factor_count(obs, thr), 4u);
}

TEST(ParallelAnalysis, SuggestedKIsLongestPrefix) {
    Eigen::VectorXd obs(4), thr(4);
    obs << 3, 1, 2, 0.1;
    thr << 1, 1.5, 1, 1;
    EXPECT_EQ(suggested_factor_count(obs, thr), 1u);
}

TEST(ParallelAnalysis, NoiseKeepsNoFactors) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    Eigen::MatrixXd x(600, 20);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = z(rng);
    const auto obs = eigenvalues(detail::correlation_of_columns(x));
    ParallelOptions o;
    o.seed = 99;
    const auto pa = parallel_analysis(600, 20, obs, o);
    EXPECT_EQ(pa.suggested_k, 0u);
    EXPECT_EQ(pa.replicates, 100u);
}

TEST(ParallelAnalysis, Reproducible) {
    Eigen::VectorXd obs = eigenvalues(model_corr(planted_pattern(12, 3, 0.6)));
    ParallelOptions o;
    o.seed = 42;
    o.replicates = 30;
    const auto a = parallel_analysis(300, 12, obs, o);
    const auto b = parallel_analysis(300, 12, obs, o);
    EXPECT_EQ(a.threshold, b.threshold);
    EXPECT_EQ(a.suggested_k, 3u);
    o.seed = 43;
    EXPECT_NE(parallel_analysis(300, 12, obs, o).threshold, a.threshold);
}

TEST(ParallelAnalysis, Quantile7) {
    std::vector<double> v{4, 1, 3, 2, 5};
    EXPECT_DOUBLE_EQ(detail::quantile_type7(v, 0.5), 3.0);
    EXPECT_DOUBLE_EQ(detail::quantile_type7(v, 0.95), 4.8);
}

TEST(ParallelAnalysis, Preconditions) {
    Eigen::VectorXd obs = Eigen::VectorXd::Ones(5);
    EXPECT_THROW(parallel_analysis(5, 5, obs), InsufficientData);
    EXPECT_THROW(parallel_analysis(50, 4, obs), SchemaError);
    ParallelOptions o;
    o.null_model = NullModel::binary;
    EXPECT_THROW(parallel_analysis(50, 5, obs, o), SchemaError);
    o.prevalences.assign(5, 0.3);
    o.replicates = 10;
    EXPECT_NO_THROW(parallel_analysis(50, 5, obs, o));
}

TEST(Minres, OneFactorAnalytic) {
    Eigen::MatrixXd l(3, 1);
    l << 0.8, 0.7, 0.6;
    const auto c = make_corr(model_corr(l));
    EXPECT_NEAR(c.r(0, 1), 0.56, 1e-15);
    EXPECT_NEAR(c.r(0, 2), 0.48, 1e-15);
    EXPECT_NEAR(c.r(1, 2), 0.42, 1e-15);
    const auto sol = extract_minres(c, 1);
    EXPECT_TRUE(sol.converged);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(sol.loadings(i, 0), l(i, 0), 1e-4);
}

TEST(Minres, IdentityHasNoCommonVariance) {
    const auto sol = extract_minres(make_corr(Eigen::MatrixXd::Identity(4, 4)), 1);
    EXPECT_NEAR(sol.loadings.cwiseAbs().maxCoeff(), 0.0, 1e-12);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(sol.uniquenesses(i), 1.0, 1e-12);
}

TEST(Minres, ThreeFactorPlanted) {
    const Eigen::MatrixXd planted = planted_pattern(12, 3, 0.7);
    const auto sol = extract_minres(make_corr(model_corr(planted)), 3);
    // unrotated solution is identified up to rotation; compare the model
    const Eigen::MatrixXd diff = sol.loadings * sol.loadings.transpose() - planted * planted.transpose();
    EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_LT(fit_stats(make_corr(model_corr(planted)), sol).rmsr, 1e-4);
}

TEST(Minres, Invariants) {
    Eigen::MatrixXd planted = planted_pattern(15, 3, 0.55);
    planted(0, 1) = 0.3;
    planted(7, 0) = -0.25;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0, 0.03);
    Eigen::MatrixXd r = model_corr(planted);
    for (int i = 0; i < 15; ++i)
        for (int j = 0; j < i; ++j) r(i, j) = r(j, i) = r(i, j) + z(rng);
    const auto sol = extract_minres(smooth_psd(make_corr(r)), 3);
    for (std::size_t s = 1; s < sol.objective_trace.size(); ++s)
        EXPECT_LE(sol.objective_trace[s], sol.objective_trace[s - 1]);
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_GE(sol.loadings.col(j).sum(), 0.0);
    for (Eigen::Index j = 1; j < 3; ++j)
        EXPECT_GE(sol.loadings.col(j - 1).squaredNorm(), sol.loadings.col(j).squaredNorm());
    const Eigen::VectorXd h2 = sol.loadings.rowwise().squaredNorm();
    EXPECT_LE(h2.maxCoeff(), 1.0 + 1e-6);
    ASSERT_TRUE(sol.converged);
    ASSERT_FALSE(sol.heywood);
    EXPECT_LT((h2 - sol.communalities).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Minres, FactorCountBounds) {
    const auto c = make_corr(model_corr(planted_pattern(4, 2, 0.5)));
    EXPECT_THROW(extract_minres(c, 0), SchemaError);
    EXPECT_THROW(extract_minres(c, 4), SchemaError);
}

TEST(Minres, HeywoodIsFlagged) {
    Eigen::MatrixXd r(3, 3);
    r << 1, 0.95, 0.9, 0.95, 1, 0.99, 0.9, 0.99, 1;
    const auto sol = extract_minres(smooth_psd(make_corr(r)), 2);
    EXPECT_TRUE(sol.heywood);
    EXPECT_GE(sol.uniquenesses.minCoeff(), 0.001 - 1e-15);
}

TEST(FitStats, RmsrExamples) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(2, 2), m = Eigen::MatrixXd::Identity(2, 2);
    c(0, 1) = c(1, 0) = 0.1;
    EXPECT_NEAR(rmsr(c, m), 0.1, 1e-15);
    EXPECT_EQ(rmsr(c, c), 0.0);
    Eigen::MatrixXd c3 = Eigen::MatrixXd::Identity(3, 3), m3 = Eigen::MatrixXd::Identity(3, 3);
    c3(0, 1) = c3(1, 0) = 0.1;
    c3(0, 2) = c3(2, 0) = 0.2;
    c3(1, 2) = c3(2, 1) = 0.2;
    EXPECT_NEAR(rmsr(c3, m3), std::sqrt(0.09 / 3.0), 1e-15);
    EXPECT_NEAR(rmsr(c3, m3), 0.17321, 5e-6);
}

TEST(FitStats, ProportionOfVariance) {
    const Eigen::MatrixXd planted = planted_pattern(12, 3, 0.7);
    const auto c = make_corr(model_corr(planted));
    const auto f = fit_stats(c, extract_minres(c, 3));
    EXPECT_LE(f.prop_variance.sum(), 1.0);
    EXPECT_NEAR(f.prop_variance.sum(), 12 * 0.49 / 12, 1e-4);
    EXPECT_NEAR(f.eigenvalues_of_r.sum(), 12.0, 1e-8);
}
