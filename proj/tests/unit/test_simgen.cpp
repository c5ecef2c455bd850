#include <gtest/gtest.h>

#include <sstream>

#include "cars/simgen.hpp"
#include "support/oracles.hpp"

using namespace cars;

TEST(BlockDesign, FourByFourBlockMatchesWorkedExample) {
    const MatrixXd a = build_block_design(12, {0.25, 0.5, 0.75});
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j)
            if (i != j) EXPECT_EQ(a(i, j), 0.25);
    for (Index i = 0; i < 3; ++i) {
        EXPECT_EQ(a(i, 3), -0.25);
        EXPECT_EQ(a(3, i), -0.25);
    }
    EXPECT_EQ(a(4, 5), 0.5);
    EXPECT_EQ(a(7, 4), -0.5);
    EXPECT_EQ(a(8, 11), -0.75);
    EXPECT_EQ(a(0, 4), 0.0);
    EXPECT_EQ(a(5, 9), 0.0);
}

TEST(BlockDesign, SymmetricUnitDiagonalHalfPositiveHalfNegative) {
    for (Index d : {6, 12, 30, 63}) {
        const MatrixXd a = build_block_design(d, {0.25, 0.5, 0.75});
        EXPECT_EQ((a - a.transpose()).norm(), 0.0);
        EXPECT_TRUE((a.diagonal().array() == 1.0).all());
        const Index m = d / 3;
        for (Index b = 0; b < 3; ++b) {
            Index pos = 0, neg = 0;
            for (Index j = 1; j < m; ++j)
                for (Index i = 0; i < j; ++i) (a(b * m + i, b * m + j) > 0 ? pos : neg)++;
            EXPECT_LE(std::abs(pos - neg), 1) << d;
        }
    }
}

TEST(BlockDesign, RejectsBadDimensions) {
    for (Index d : {10, 3, 0}) {
        try {
            build_block_design(d, {0.25, 0.5, 0.75});
            FAIL() << d;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::BadDimension);
        }
    }
}

TEST(NearestCorrelation, ValidInputsAreFixedPoints) {
    const auto id = nearest_correlation(MatrixXd::Identity(5, 5));
    EXPECT_LT((id.matrix - MatrixXd::Identity(5, 5)).norm(), 1e-12);
    MatrixXd two(2, 2);
    two << 1, 0.5, 0.5, 1;
    EXPECT_LT((nearest_correlation(two).matrix - two).norm(), 1e-12);
}

TEST(NearestCorrelation, PublishedThreeByThreeExample) {
    MatrixXd a(3, 3);
    a << 1, 1, 0, 1, 1, 1, 0, 1, 1;
    const auto r = nearest_correlation(a, 1e-10, 5000);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.matrix(0, 1), 0.7607, 1e-4);
    EXPECT_NEAR(r.matrix(1, 2), 0.7607, 1e-4);
    EXPECT_NEAR(r.matrix(0, 2), 0.1573, 1e-4);
}

TEST(NearestCorrelation, MatchesLongRunOracleOnIndefiniteBlocks) {
    for (auto [m, xi] : {std::pair<Index, double>{12, 0.75}, {20, 0.5}, {30, 0.25}}) {
        const MatrixXd a = design_block(m, xi);
        const auto r = nearest_correlation(a);
        EXPECT_TRUE(r.converged);
        const MatrixXd ref = oracle::nearest_correlation(a);
        EXPECT_LT((r.matrix - ref).norm(), 1e-6) << m;
        EXPECT_NEAR((r.matrix - a).norm(), (ref - a).norm(), 1e-6);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(r.matrix, Eigen::EigenvaluesOnly);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
        EXPECT_TRUE(((r.matrix.diagonal().array() - 1.0).abs() < 1e-15).all());
    }
}

TEST(NearestCorrelation, ExhaustionIsFlagged) {
    const auto r = nearest_correlation(design_block(20, 0.75), 1e-14, 3);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 3);
}

TEST(NearestCorrelation, LargeBlockEntriesConcentrateNearDesignMagnitude) {
    const auto r = nearest_correlation(design_block(333, 0.25));
    Index inside = 0, total = 0;
    for (Index j = 1; j < 333; ++j)
        for (Index i = 0; i < j; ++i, ++total) {
            const double v = std::abs(r.matrix(i, j));
            inside += v >= 0.15 && v <= 0.3;
        }
    EXPECT_GE(static_cast<double>(inside) / static_cast<double>(total), 0.9);
}

TEST(SampleCovariates, MomentsMatchTarget) {
    MatrixXd corr = MatrixXd::Identity(3, 3);
    corr(0, 1) = corr(1, 0) = 0.75;
    Philox4x32 rng(3, 0);
    const MatrixXd x = sample_covariates(corr, 50000, rng);
    for (Index j = 0; j < 3; ++j) EXPECT_NEAR(x.col(j).mean(), 0.0, 0.02);
    const MatrixXd c = (x.transpose() * x) / 50000.0;
    EXPECT_NEAR(c(0, 1) / std::sqrt(c(0, 0) * c(1, 1)), 0.75, 0.02);
    EXPECT_NEAR(c(0, 2) / std::sqrt(c(0, 0) * c(2, 2)), 0.0, 0.02);
    EXPECT_NEAR(c(1, 2) / std::sqrt(c(1, 1) * c(2, 2)), 0.0, 0.02);
    Philox4x32 again(3, 0);
    EXPECT_EQ(sample_covariates(corr, 50000, again), x);
}

TEST(MakeBeta, EquidistantGrid) {
    const auto two = make_beta(60, 2.0 / 60.0, 1);
    EXPECT_EQ(two.influential_set.size(), 2u);
    EXPECT_EQ(two.beta[two.influential_set[0]], -0.9);
    EXPECT_EQ(two.beta[two.influential_set[1]], 1.0);
    const auto three = make_beta(30, 0.1, 2);
    EXPECT_NEAR(three.beta[three.influential_set[1]], 0.05, 1e-15);
    const auto twenty = make_beta(300, 20.0 / 300.0, 1);
    for (std::size_t i = 1; i < 20; ++i)
        EXPECT_NEAR(twenty.beta[twenty.influential_set[i]] - twenty.beta[twenty.influential_set[i - 1]], 0.1, 1e-12);
    EXPECT_EQ(make_beta(30, 1.0 / 30.0, 1).beta.maxCoeff(), 1.0);
}

TEST(MakeBeta, PlacementWithinChosenBlock) {
    const auto t = make_beta(150, 0.1, 3);
    ASSERT_EQ(t.influential_set.size(), 15u);
    for (Index j : t.influential_set) EXPECT_GE(j, 100);
    Index nonzero = 0;
    for (Index j = 0; j < 150; ++j) nonzero += t.beta[j] != 0.0;
    EXPECT_EQ(nonzero, 15);
    EXPECT_EQ(t.influential_set, (std::vector<Index>{101, 105, 108, 111, 115, 118, 121, 125, 128, 131, 135, 138,
                                                     141, 145, 148}));
}

TEST(MakeBeta, RejectsUnrealizableFractions) {
    for (double f : {0.001, 0.5}) {
        try {
            make_beta(30, f, 1);
            FAIL() << f;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::BadFraction);
        }
    }
}

TEST(Calibration, NoiseAlgebra) {
    EXPECT_DOUBLE_EQ(calibrate_noise(1.0, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(calibrate_noise(3.0, 0.75), 1.0);
    try {
        calibrate_noise(VectorXd::Zero(3), MatrixXd::Identity(3, 3), 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ZeroSignal);
    }
}

TEST(Calibration, CensoringLocation) {
    EXPECT_NEAR(calibrate_censoring(0.5, std::sqrt(0.5), 0.5).log_mean, 0.0, 1e-15);
    const auto p = calibrate_censoring(0.5, std::sqrt(0.5), 0.25);
    EXPECT_NEAR(p.log_mean, 0.6744897501960817 * std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(p.log_sd, 1.0, 1e-15);
}

TEST(GenerateDataset, DeterministicAndCutoffCensorsTopDecile) {
    ScenarioConfig c;
    c.n = 300;
    c.d = 30;
    c.influential_block = 3;
    c.seed = 99;
    const auto a = generate_dataset(c, 4), b = generate_dataset(c, 4);
    EXPECT_EQ(a.sample.times, b.sample.times);
    EXPECT_EQ(a.sample.covariates, b.sample.covariates);
    EXPECT_EQ(a.truth.beta, b.truth.beta);
    const double censored = static_cast<double>(c.n - a.sample.event_count()) / static_cast<double>(c.n);
    EXPECT_GE(censored, 0.10);
    for (Index j : a.truth.influential_set) EXPECT_GE(j, 20);
    const double cut = a.sample.times.maxCoeff();
    for (Index i = 0; i < c.n; ++i)
        if (a.sample.times[i] == cut) EXPECT_EQ(a.sample.events[i], 0);
}

TEST(GenerateDataset, CutoffNeverRemovesCensoring) {
    ScenarioConfig c;
    c.n = 400;
    c.d = 12;
    c.cutoff_quantile = 1.0;
    const auto sc_open = prepare_scenario(c);
    c.cutoff_quantile = 0.8;
    const auto sc_cut = prepare_scenario(c);
    for (std::uint64_t r = 0; r < 5; ++r) {
        const auto open = generate_replicate(sc_open, 0, r);
        const auto cut = generate_replicate(sc_cut, 0, r);
        EXPECT_EQ(open.covariates, cut.covariates);
        for (Index i = 0; i < c.n; ++i) {
            EXPECT_LE(cut.events[i], open.events[i]);
            EXPECT_LE(cut.times[i], open.times[i]);
        }
    }
}

TEST(ScenarioConfigFile, ParsesAndValidates) {
    std::istringstream in("# scenario\nn = 250\nd=150\nblock_magnitudes = 0.2, 0.4, 0.6\ninfluential_block=3\n"
                          "influential_fraction=0.05\nexplained_variance=0.25\ncensoring_rate=0.75\nseed=17\n");
    const auto c = read_scenario_config(in);
    EXPECT_EQ(c.n, 250);
    EXPECT_EQ(c.block_magnitudes[2], 0.6);
    EXPECT_EQ(c.seed, 17u);
    EXPECT_EQ(c.cutoff_quantile, 0.9);
    std::istringstream bad("n=10\nwidth=3\n");
    EXPECT_THROW(read_scenario_config(bad), Error);
    std::istringstream badd("d=10\n");
    try {
        read_scenario_config(badd);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BadDimension);
    }
}

TEST(WriteTruth, OneRowPerCovariate) {
    const auto t = make_beta(6, 1.0 / 6.0, 2);
    std::ostringstream out;
    write_truth(out, t, detail::default_names(6));
    EXPECT_EQ(out.str(), "name,beta,influential\nx1,0,0\nx2,0,0\nx3,0,0\nx4,1,1\nx5,0,0\nx6,0,0\n");
}
