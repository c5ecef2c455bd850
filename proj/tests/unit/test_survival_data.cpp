#include <gtest/gtest.h>

#include <sstream>

#include "cars/survival_data.hpp"

using namespace cars;

namespace {

ErrorKind kind_of(const std::string& csv) {
    std::istringstream in(csv);
    try {
        read_sample(in);
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an error for:\n" << csv;
    return ErrorKind::Io;
}

std::optional<long> row_of(const std::string& csv) {
    std::istringstream in(csv);
    try {
        read_sample(in);
    } catch (const Error& e) {
        return e.row();
    }
    return std::nullopt;
}

}  // namespace

TEST(SurvivalData, ReadsCovariatesByHeader) {
    std::istringstream in("time,status,a,b\n1.5,1,0.1,2\n2.5,0,0.3,4\n3,1,-1,5\n");
    const auto s = read_sample(in);
    ASSERT_EQ(s.size(), 3);
    ASSERT_EQ(s.dim(), 2);
    EXPECT_EQ(s.covariate_names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(s.event_count(), 2);
    EXPECT_DOUBLE_EQ(s.log_times[0], std::log(1.5));
    EXPECT_EQ(s.covariates(2, 0), -1.0);
}

TEST(SurvivalData, StatusColumnMayComeAnywhere) {
    std::istringstream in("a,status,time\n1,1,2\n2,0,3\n");
    const auto s = read_sample(in);
    EXPECT_EQ(s.covariate_names, (std::vector<std::string>{"a"}));
    EXPECT_EQ(s.events[1], 0);
    EXPECT_EQ(s.times[1], 3.0);
}

TEST(SurvivalData, RejectsInvalidCells) {
    EXPECT_EQ(kind_of("time,status,a\n1,1,0\n0,1,1\n"), ErrorKind::NonPositiveTime);
    EXPECT_EQ(kind_of("time,status,a\n1,1,0\n-2,1,1\n"), ErrorKind::NonPositiveTime);
    EXPECT_EQ(kind_of("time,status,a\n1,2,0\n2,1,1\n"), ErrorKind::NonBinaryStatus);
    EXPECT_EQ(kind_of("time,status,a\n1,1,x\n2,1,1\n"), ErrorKind::NonNumericCell);
    EXPECT_EQ(kind_of("time,status,a\n1,1,\n2,1,1\n"), ErrorKind::NonNumericCell);
    EXPECT_EQ(kind_of("time,a\n1,0\n2,1\n"), ErrorKind::MissingColumn);
    EXPECT_EQ(kind_of("time,status\n1,1\n"), ErrorKind::TooFewRows);
    EXPECT_EQ(kind_of("time,status,a\n1,1\n2,1,1\n"), ErrorKind::BadShape);
}

TEST(SurvivalData, ErrorsCarryOneBasedDataRow) {
    EXPECT_EQ(row_of("time,status,a\n1,1,0\n2,1,0\n0,1,1\n"), 3);
    EXPECT_EQ(row_of("time,status,a\n1,7,0\n2,1,0\n"), 1);
}

TEST(SurvivalData, WriteReadRoundTripIsBitExact) {
    const VectorXd t = (VectorXd(4) << 0.1, 1.0 / 3.0, 2.718281828459045, 1e-300).finished();
    const VectorXi e = (VectorXi(4) << 1, 0, 1, 1).finished();
    MatrixXd x(4, 2);
    x << 0.1, -1e10, 1.0 / 7.0, 5e-324, -0.0, 3.0, 123456.789, -2.5;
    const auto s = make_sample(t, e, x, {"g1", "g2"});
    std::ostringstream out;
    write_sample(out, s);
    std::istringstream in(out.str());
    const auto back = read_sample(in);
    for (Index i = 0; i < 4; ++i) {
        EXPECT_EQ(back.times[i], s.times[i]);
        EXPECT_EQ(back.events[i], s.events[i]);
        for (Index j = 0; j < 2; ++j) EXPECT_EQ(back.covariates(i, j), s.covariates(i, j));
    }
    EXPECT_EQ(back.covariate_names, s.covariate_names);
    std::ostringstream again;
    write_sample(again, back);
    EXPECT_EQ(again.str(), out.str());
}

TEST(SurvivalData, CovariateSummaryUsesUnbiasedVariance) {
    MatrixXd x(4, 2);
    x << 1, 5, 2, 5, 3, 5, 4, 5;
    const auto sum = covariate_summary(x);
    EXPECT_DOUBLE_EQ(sum.means[0], 2.5);
    EXPECT_DOUBLE_EQ(sum.variances[0], 5.0 / 3.0);
    EXPECT_FALSE(sum.degenerate[0]);
    EXPECT_TRUE(sum.degenerate[1]);
    EXPECT_EQ(sum.variances[1], 0.0);
    EXPECT_TRUE(sum.any_degenerate());
}
