#include <gtest/gtest.h>

#include <random>

#include "cars/cox.hpp"
#include "support/oracles.hpp"

using namespace cars;

TEST(CoxUnivariate, AgreesWithGoldenSectionMaximizer) {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        const auto inst = oracle::random_survival(rng, 40 + 5 * rep, 1, 0.1 * rep - 0.4, 0.3, rep % 3 ? 0.0 : 0.2);
        const VectorXd x = inst.x.col(0);
        const auto fit = cox_univariate(inst.t, inst.ev, x);
        ASSERT_FALSE(fit.separation);
        EXPECT_TRUE(fit.converged);
        const double ref = oracle::golden_max(
            [&](double b) { return oracle::breslow_loglik(inst.t, inst.ev, x, b); }, -10.0, 10.0);
        EXPECT_NEAR(fit.beta_hat, ref, 1e-6) << rep;
    }
}

TEST(CoxUnivariate, ZScoreIsInvariantToCovariateScale) {
    std::mt19937_64 rng(32);
    const auto inst = oracle::random_survival(rng, 60, 1, 0.6, 0.2);
    const VectorXd x = inst.x.col(0);
    const auto a = cox_univariate(inst.t, inst.ev, x);
    const auto b = cox_univariate(inst.t, inst.ev, (4.0 * x.array() + 1.0).matrix());
    const auto c = cox_univariate(inst.t, inst.ev, (-x).eval());
    EXPECT_NEAR(a.z_score, b.z_score, 1e-9);
    EXPECT_NEAR(a.beta_hat, 4.0 * b.beta_hat, 1e-9);
    EXPECT_NEAR(a.z_score, -c.z_score, 1e-9);
}

TEST(CoxUnivariate, StandardErrorIsInverseRootInformation) {
    std::mt19937_64 rng(33);
    const auto inst = oracle::random_survival(rng, 50, 1, 0.5, 0.25);
    const VectorXd x = inst.x.col(0);
    const auto fit = cox_univariate(inst.t, inst.ev, x);
    const double h = 1e-4;
    auto ll = [&](double b) { return oracle::breslow_loglik(inst.t, inst.ev, x, b); };
    const double second = (ll(fit.beta_hat + h) - 2.0 * ll(fit.beta_hat) + ll(fit.beta_hat - h)) / (h * h);
    EXPECT_NEAR(fit.standard_error, 1.0 / std::sqrt(-second), 1e-4);
}

TEST(CoxUnivariate, MonotoneLikelihoodIsCappedAndFlagged) {
    // the covariate orders the event times perfectly
    const VectorXd t = (VectorXd(6) << 1, 2, 3, 4, 5, 6).finished();
    const VectorXi ev = VectorXi::Ones(6);
    const VectorXd x = (VectorXd(6) << 6, 5, 4, 3, 2, 1).finished();
    const auto fit = cox_univariate(t, ev, x);
    EXPECT_TRUE(fit.separation);
    EXPECT_FALSE(fit.converged);
    EXPECT_GT(fit.beta_hat, 0.0);
    EXPECT_TRUE(std::isfinite(fit.z_score));
    const double sd = std::sqrt((x.array() - x.mean()).square().sum() / 5.0);
    EXPECT_NEAR(fit.beta_hat * sd, CoxOptions{}.beta_cap, 1e-12);
    const auto neg = cox_univariate(t, ev, (-x).eval());
    EXPECT_TRUE(neg.separation);
    EXPECT_LT(neg.beta_hat, 0.0);
}

TEST(CoxUnivariate, ConstantCovariateIsDegenerate) {
    const VectorXd t = (VectorXd(4) << 1, 2, 3, 4).finished();
    const VectorXi ev = (VectorXi(4) << 1, 0, 1, 1).finished();
    const auto fit = cox_univariate(t, ev, VectorXd::Constant(4, 2.0));
    EXPECT_TRUE(fit.degenerate);
    EXPECT_EQ(fit.z_score, 0.0);
}

TEST(CoxUnivariate, NoEventsIsRejected) {
    const VectorXd t = (VectorXd(3) << 1, 2, 3).finished();
    try {
        CoxRiskSets(t, VectorXi::Zero(3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateOutcome);
    }
}

TEST(CoxScores, OneZScorePerCovariate) {
    std::mt19937_64 rng(34);
    auto inst = oracle::random_survival(rng, 80, 4, 1.0, 0.3);
    inst.x.col(3).setConstant(0.0);
    const auto s = make_sample(inst.t, inst.ev, inst.x);
    const auto sv = cox_scores(s);
    ASSERT_EQ(sv.size(), 4);
    EXPECT_EQ(sv.method, ScoreMethod::Cox);
    EXPECT_GT(sv.scores[0], 3.0);  // larger x shortens survival, raising the hazard
    EXPECT_EQ(sv.scores[3], 0.0);
    EXPECT_TRUE(sv.diagnostics.degenerate[3]);
    const auto single = cox_univariate(s.log_times, s.events, s.covariates.col(1));
    EXPECT_EQ(sv.scores[1], single.z_score);
}
