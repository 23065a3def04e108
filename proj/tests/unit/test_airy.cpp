#include <cmath>

#include <gtest/gtest.h>

#include "kpz/airy.hpp"

using namespace kpz;

namespace {

// first ten zeros of Ai
const double kAiryZeros[] = {-2.338107410459767, -4.087949444130971, -5.520559828095551, -6.786708090071759,
                             -7.944133587120853, -9.022650853340980, -10.04017434155809, -11.00852430373326,
                             -11.93601556323626, -12.82877675286576};

const std::vector<AiryEdgeSample>& gue_samples()
{
    static const auto s = sample_gue_edges(512, 10, 2000, 77);
    return s;
}

}  // namespace

TEST(Gue, TopPointMatchesTracyWidomMean)
{
    std::vector<double> top;
    for (const auto& s : gue_samples()) top.push_back(s.points[0]);
    const auto m = stats::mean_se(top);
    // Tracy-Widom (beta = 2) mean; finite-N bias is O(N^{-2/3})
    EXPECT_NEAR(m.mean, -1.7710868, 0.05 + 3.0 * m.se);
}

TEST(Gue, PointsDescending)
{
    for (const auto& s : gue_samples()) {
        ASSERT_EQ(s.points.size(), 10u);
        EXPECT_EQ(s.N, 512u);
        for (std::size_t k = 1; k < s.points.size(); ++k) EXPECT_GT(s.points[k - 1], s.points[k]);
    }
}

TEST(Gue, TopPointTailBelowEdgeEnvelope)
{
    for (double s : {0.5, 1.0}) {
        std::size_t hits = 0;
        for (const auto& smp : gue_samples()) hits += smp.points[0] >= s;
        const auto [lo, hi] = stats::clopper_pearson(hits, gue_samples().size(), 0.01);
        EXPECT_LE(lo, std::exp(-4.0 / 3.0 * std::pow(s, 1.5))) << s;
    }
}

TEST(Gue, ArgumentRanges)
{
    Engine eng = replica_engine(1, 0);
    EXPECT_THROW(sample_gue_edge(63, 4, eng), DomainError);
    EXPECT_THROW(sample_gue_edge(128, 17, eng), DomainError);
    EXPECT_THROW(sample_gue_edge(128, 0, eng), DomainError);
}

TEST(Gue, Deterministic)
{
    const auto a = sample_gue_edges(64, 4, 3, 9), b = sample_gue_edges(64, 4, 3, 9);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].points, b[i].points);
}

TEST(Factors, Examples)
{
    EXPECT_DOUBLE_EQ(fermi_factor(2.0, 2.0, 5.0), 0.5);
    EXPECT_NEAR(log_factor(2.0, 2.0, 5.0), std::log(2.0), 1e-15);
    EXPECT_NEAR(fermi_factor(3.0, 0.0, 1.0), 1.0 / (1.0 + std::exp(3.0)), 1e-15);
    EXPECT_NEAR(fermi_factor(3.0, 0.0, 1.0), 0.04743, 1e-5);
    EXPECT_GT(fermi_factor(-1000.0, 0.0, 8.0), 0.999999);
    EXPECT_EQ(fermi_factor(1000.0, 0.0, 8.0), 0.0);
}

TEST(Factors, FermiIsExpOfMinusLog)
{
    for (double T : {0.5, 1.0, 8.0}) {
        for (double x = -5.0; x <= 5.0; x += 0.5) {
            EXPECT_NEAR(fermi_factor(x, 0.3, T), std::exp(-log_factor(x, 0.3, T)), 1e-14);
        }
    }
}

TEST(LaplaceRhs, MonotoneWithLimits)
{
    const auto& smp = gue_samples();
    double prev = -1.0;
    for (double s : {-2.0, -1.0, 0.0, 1.0, 2.0, 4.0}) {
        const double v = laplace_rhs(smp, s, 2.0, kPosInf).mean;
        EXPECT_GE(v, prev);
        prev = v;
    }
    EXPECT_GT(laplace_rhs(smp, 30.0, 2.0).mean, 0.999);
    EXPECT_LT(laplace_rhs(smp, -30.0, 2.0, kPosInf).mean, 1e-10);
}

TEST(LaplaceRhs, TruncationToleranceEnforced)
{
    EXPECT_THROW(laplace_rhs(gue_samples(), -20.0, 2.0, 1e-3), DomainError);
    EXPECT_THROW(laplace_rhs({}, 0.0, 2.0), DomainError);
}

TEST(LaplaceLhs, Examples)
{
    const std::vector<double> at_s(10, 0.7);
    EXPECT_NEAR(laplace_lhs(at_s, 0.7, 3.0).mean, std::exp(-1.0), 1e-15);
    EXPECT_EQ(laplace_lhs(at_s, 0.7, 3.0).se, 0.0);
    EXPECT_NEAR(laplace_lhs(at_s, 1e3, 3.0).mean, 1.0, 1e-15);
    EXPECT_EQ(laplace_lhs(at_s, -1e3, 3.0).mean, 0.0);
}

TEST(AiryZeros, BoundValues)
{
    EXPECT_NEAR(airy_zero_bound(1), -std::pow(1.5 * kPi, 2.0 / 3.0), 1e-14);
    EXPECT_NEAR(airy_zero_bound(1), -2.810784, 1e-6);
    EXPECT_NEAR(airy_zero_bound(10), -13.046502, 1e-6);
    EXPECT_THROW(airy_zero_bound(0), DomainError);
}

TEST(AiryZeros, StatedBoundFailsForEveryK)
{
    const auto rows = airy_zero_bound_check(10);
    ASSERT_EQ(rows.size(), 10u);
    for (const auto& r : rows) {
        EXPECT_NEAR(r.zero, kAiryZeros[r.k - 1], 1e-12);
        EXPECT_FALSE(r.holds) << r.k;
        EXPECT_GT(r.zero, r.bound);
    }
}

TEST(AiryTailSum, DecreasingInS)
{
    double prev = kPosInf;
    for (double s = -2.0; s <= 4.0; s += 0.5) {
        const double b = airy_tail_sum_bound(-9.0, 10, s, 2.0);
        EXPECT_LT(b, prev);
        prev = b;
    }
}
