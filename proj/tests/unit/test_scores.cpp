#include <gtest/gtest.h>

#include <random>

#include "frailtyfa/efa.hpp"
#include "frailtyfa/findex.hpp"
#include "frailtyfa/rotate.hpp"
#include "frailtyfa/scores.hpp"
#include "frailtyfa/synth.hpp"

using namespace frailtyfa;

namespace {

struct Fitted {
    SynthCohort synth;
    DeficitMatrix m;
    CorrMatrix c;
    RotatedSolution rot;
};

Fitted fit(const SynthSpec& spec, std::size_t k) {
    Fitted f{generate(spec), {}, {}, {}};
    f.m = DeficitMatrix(f.synth.cohort);
    f.c = smooth_psd(pairwise_phi_matrix(f.m));
    f.rot = oblimin_rotate(extract_minres(f.c, k));
    return f;
}

} // namespace

TEST(Pearson, Examples) {
    const std::vector<double> a{1, 2, 3}, b{3, 2, 1};
    EXPECT_DOUBLE_EQ(pearson(a, a), 1.0);
    EXPECT_DOUBLE_EQ(pearson(a, b), -1.0);
    EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}), 0.8, 1e-15);
    EXPECT_THROW(pearson(std::vector<double>{1, 1, 1}, a), ConstantInput);
    EXPECT_THROW(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InsufficientData);
}

TEST(Pearson, AffineInvariance) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    std::vector<double> x(50), y(50), xs(50), yn(50);
    for (int i = 0; i < 50; ++i) {
        x[i] = z(rng);
        y[i] = x[i] + z(rng);
        xs[i] = 3.5 * x[i] - 7;
        yn[i] = -0.25 * y[i] + 2;
    }
    const double r = pearson(x, y);
    EXPECT_NEAR(pearson(xs, y), r, 1e-12);
    EXPECT_NEAR(pearson(x, yn), -r, 1e-12);
}

TEST(Scores, IdentityModel) {
    std::mt19937_64 rng(3);
    Eigen::MatrixXd z(30, 3);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = std::normal_distribution<double>()(rng);
    RotatedSolution rot;
    rot.pattern = Eigen::MatrixXd::Identity(3, 3);
    rot.phi = Eigen::MatrixXd::Identity(3, 3);
    const auto s = regression_scores(z, make_corr(Eigen::MatrixXd::Identity(3, 3)), rot);
    EXPECT_TRUE(s.weights.isIdentity(1e-15));
    EXPECT_TRUE(s.scores.isApprox(z, 1e-15));
    EXPECT_EQ(s.method, "thurstone-regression");
}

TEST(Scores, AllMissingRowScoresZero) {
    auto spec = balanced_spec(400, 2, 2, 0.6, 0.0);
    auto f = fit(spec, 2);
    for (std::size_t j = 0; j < f.m.cols(); ++j) f.m(0, j) = Deficit::missing;
    const auto s = regression_scores(f.m, f.c, f.rot);
    EXPECT_EQ(s.all_missing_rows, 1u);
    EXPECT_TRUE(s.scores.row(0).isZero(0));
}

TEST(Scores, ClosedFormOnCompleteData) {
    auto f = fit(balanced_spec(1500, 4, 3, 0.6, 0.2), 3);
    const auto s = regression_scores(f.m, f.c, f.rot);
    const Eigen::MatrixXd z = standardized_deficits(f.m);
    const Eigen::MatrixXd expected = z * f.c.r.inverse() * f.rot.pattern * f.rot.phi;
    EXPECT_LT((s.scores - expected).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_TRUE(s.scores.allFinite());
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_LT(std::abs(s.scores.col(j).mean()), 0.05);
}

TEST(Scores, TrackPlantedLatents) {
    SynthSpec spec;
    spec.n = 3000;
    spec.seed = 21;
    spec.loadings = Eigen::MatrixXd::Zero(24, 2);
    for (int i = 0; i < 24; ++i) spec.loadings(i, i % 2) = 0.75;
    spec.phi = Eigen::Matrix2d::Identity();
    spec.phi(0, 1) = spec.phi(1, 0) = 0.3;
    for (int i = 0; i < 24; ++i) spec.thresholds.push_back(-0.5 + 0.05 * i);
    auto f = fit(spec, 2);
    const auto s = regression_scores(f.m, f.c, f.rot);
    Eigen::MatrixXd planted = spec.loadings;
    const auto al = align(f.rot.pattern, planted);
    for (int j = 0; j < 2; ++j) {
        std::vector<double> est(spec.n), truth(spec.n);
        for (std::size_t i = 0; i < spec.n; ++i) {
            est[i] = al.signs[j] * s.scores(static_cast<Eigen::Index>(i), al.permutation[j]);
            truth[i] = f.synth.latents(static_cast<Eigen::Index>(i), j);
        }
        EXPECT_GT(pearson(est, truth), 0.85) << "factor " << j;
    }
}

TEST(Scores, SingularCorrelationIsRejected) {
    RotatedSolution rot;
    rot.pattern = Eigen::MatrixXd::Constant(3, 1, 0.5);
    rot.phi = Eigen::MatrixXd::Identity(1, 1);
    EXPECT_THROW(regression_scores(Eigen::MatrixXd::Zero(5, 3), make_corr(Eigen::MatrixXd::Ones(3, 3)), rot),
                 SingularMatrix);
}

TEST(ScoreCorrelations, ShapeAndOrdering) {
    auto f = fit(elsa58_spec(3000, 13), 4);
    const auto s = regression_scores(f.m, f.c, f.rot);
    const auto fi = frailty_indices(f.synth.cohort);
    const Eigen::MatrixXd r = score_correlation_report(s, fi);
    ASSERT_EQ(r.rows(), 5);
    EXPECT_TRUE(r.isApprox(r.transpose(), 0));
    EXPECT_TRUE((r.diagonal().array() == 1.0).all());
    // the largest subdimension dominates the deficit count
    EXPECT_GT(r(0, 4), r(3, 4));
}

TEST(ScoreCorrelations, DuplicatedScoreAndSingleFactor) {
    ScoreMatrix s;
    s.scores.resize(6, 1);
    std::vector<FrailtyResult> fi(6);
    for (int i = 0; i < 6; ++i) {
        s.scores(i, 0) = 0.1 * i * i;
        fi[static_cast<std::size_t>(i)].fi = 0.1 * i * i;
    }
    const Eigen::MatrixXd r = score_correlation_report(s, fi);
    ASSERT_EQ(r.rows(), 2);
    EXPECT_NEAR(r(0, 1), 1.0, 1e-15);
    EXPECT_EQ(r(0, 1), r(1, 0));
}
