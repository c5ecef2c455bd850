#include <gtest/gtest.h>

#include <random>

#include "cars/shrink_corr.hpp"
#include "support/oracles.hpp"

using namespace cars;

namespace {

MatrixXd gaussian(std::mt19937_64& rng, Index n, Index d, double common = 0.0) {
    std::normal_distribution<double> normal;
    MatrixXd x(n, d);
    for (Index i = 0; i < n; ++i) {
        const double f = normal(rng);
        for (Index j = 0; j < d; ++j) x(i, j) = normal(rng) + common * f;
    }
    return x;
}

}  // namespace

TEST(ShrinkageLambda, GramIdentityMatchesDefinition) {
    std::mt19937_64 rng(5);
    for (auto [n, d, c] : {std::tuple{10, 4, 0.0}, {30, 12, 0.8}, {8, 40, 0.3}, {200, 6, 2.0}}) {
        const MatrixXd x = gaussian(rng, n, d, c);
        EXPECT_NEAR(shrinkage_lambda(x), oracle::shrinkage_lambda(x), 1e-10) << n << "x" << d;
    }
}

TEST(ShrinkageLambda, StaysInUnitInterval) {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 30; ++rep) {
        const double lam = shrinkage_lambda(gaussian(rng, 5 + rep, 3 + rep % 7, 0.1 * rep));
        EXPECT_GE(lam, 0.0);
        EXPECT_LE(lam, 1.0);
    }
}

TEST(ShrinkageLambda, IdenticalBalancedColumnsNeedNoShrinkage) {
    // z_ij^2 is constant for +-1 columns, so every Var(r_jk) estimate is 0
    MatrixXd x(8, 3);
    for (Index i = 0; i < 8; ++i) x.row(i).setConstant(i % 2 ? 1.0 : -1.0);
    EXPECT_NEAR(shrinkage_lambda(x), 0.0, 1e-12);
}

TEST(ShrinkageLambda, UncorrelatedColumnsShrinkStrongly) {
    std::mt19937_64 rng(7);
    EXPECT_GT(shrinkage_lambda(gaussian(rng, 20, 50)), 0.5);
}

TEST(ShrinkageLambda, RejectsTinyProblems) {
    EXPECT_THROW(shrinkage_lambda(MatrixXd::Ones(10, 1)), Error);
    EXPECT_THROW(shrinkage_lambda(MatrixXd::Ones(2, 4)), Error);
}

TEST(InverseSqrt, DenseSquaresToInverse) {
    std::mt19937_64 rng(8);
    const MatrixXd x = gaussian(rng, 40, 10, 0.7);
    const auto r = sample_correlations(x);
    const auto inv = inverse_sqrt(shrink(r, 0.2));
    ASSERT_FALSE(inv.structured());
    const MatrixXd m = inv.to_dense();
    const MatrixXd rs = shrink(r, 0.2).dense();
    EXPECT_LT((m * m * rs - MatrixXd::Identity(10, 10)).norm(), 1e-10);
    EXPECT_LT((m - m.transpose()).norm(), 1e-14);
}

TEST(InverseSqrt, StructuredEqualsDenseWhenDimensionExceedsSampleSize) {
    std::mt19937_64 rng(9);
    for (double lam : {0.05, 0.4, 1.0}) {
        MatrixXd x = gaussian(rng, 12, 45, 0.5);
        x.col(7).setConstant(3.0);
        const auto sc = standardize_columns(x);
        MatrixXd r = sc.z.transpose() * sc.z / 11.0;
        for (Index j = 0; j < 45; ++j) r(j, j) = 1.0;
        const auto dense = inverse_sqrt(shrink(r, lam));
        const auto structured = inverse_sqrt(shrink_factored(sc, lam));
        ASSERT_TRUE(structured.structured());
        EXPECT_LT((dense.to_dense() - structured.to_dense()).cwiseAbs().maxCoeff(), 1e-10) << lam;
        EXPECT_NEAR(dense.min_eigenvalue(), structured.min_eigenvalue(), 1e-10);
        const VectorXd v = VectorXd::LinSpaced(45, -1.0, 1.0);
        EXPECT_LT((dense.apply(v) - structured.apply(v)).norm(), 1e-10);
    }
}

TEST(InverseSqrt, UnshrunkRankDeficientMatrixIsSingular) {
    std::mt19937_64 rng(10);
    const MatrixXd x = gaussian(rng, 6, 15);
    const auto sc = standardize_columns(x);
    try {
        inverse_sqrt(shrink_factored(sc, 0.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SingularMatrix);
    }
    MatrixXd r = sc.z.transpose() * sc.z / 5.0;
    for (Index j = 0; j < 15; ++j) r(j, j) = 1.0;
    EXPECT_THROW(inverse_sqrt(shrink(r, 0.0)), Error);
}

TEST(InverseSqrt, FullShrinkageIsIdentity) {
    std::mt19937_64 rng(12);
    const auto r = sample_correlations(gaussian(rng, 30, 5, 1.0));
    EXPECT_LT((inverse_sqrt(shrink(r, 1.0)).to_dense() - MatrixXd::Identity(5, 5)).norm(), 1e-14);
}
