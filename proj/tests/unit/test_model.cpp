#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "kpz/model.hpp"
#include "kpz/statistics.hpp"

using namespace kpz;

TEST(Common, LogSumExpSkipsNegInf)
{
    const std::vector<double> v{kNegInf, std::log(2.0), std::log(3.0)};
    EXPECT_NEAR(log_sum_exp(v), std::log(5.0), 1e-15);
    const std::vector<double> none{kNegInf, kNegInf};
    EXPECT_EQ(log_sum_exp(none), kNegInf);
}

TEST(Common, SoftplusMatchesNaiveFormula)
{
    for (double x : {-40.0, -3.0, 0.0, 2.5, 40.0}) EXPECT_NEAR(softplus(x), std::log1p(std::exp(x)), 1e-14 * (1 + std::abs(x)));
    EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
}

TEST(Profile, RejectsBadGrids)
{
    EXPECT_THROW(Profile({0.0}, {1.0}), DomainError);
    EXPECT_THROW(Profile({0.0, 0.0}, {1.0, 1.0}), DomainError);
    EXPECT_THROW(Profile({0.0, 1.0}, {1.0, kPosInf}), DomainError);
    EXPECT_NO_THROW(Profile({0.0, 1.0}, {1.0, kNegInf}));
}

TEST(Profile, InterpolatesAndIsNegInfOutside)
{
    const Profile p({-1.0, 0.0, 2.0}, {0.0, 1.0, 3.0});
    EXPECT_DOUBLE_EQ(p(-0.5), 0.5);
    EXPECT_DOUBLE_EQ(p(1.0), 2.0);
    EXPECT_EQ(p(2.5), kNegInf);
    EXPECT_EQ(p(-1.5), kNegInf);
}

TEST(Profile, CsvWithHeaderCommentsAndNegInf)
{
    std::istringstream in("y,f\n# comment\n-1,0\n0, -inf\n1,2.5\n");
    const auto p = load_profile_csv(in);
    ASSERT_EQ(p.grid().size(), 3u);
    EXPECT_EQ(p.values()[1], kNegInf);
    EXPECT_DOUBLE_EQ(p.values()[2], 2.5);
    std::istringstream bad("-1,0\n0,x\n");
    EXPECT_THROW(load_profile_csv(bad), DomainError);
}

TEST(Hyp, ZeroProfileIsValidWithCentredWitness)
{
    const auto f = Profile::constant(0.0, -3.0, 3.0, 61);
    const auto rep = validate_hyp(f, {1.0, 0.5, 1.0, 1.0, 1.0});
    EXPECT_TRUE(rep.valid());
    ASSERT_TRUE(rep.witness);
    EXPECT_NEAR(rep.witness->first, -0.5, 1e-12);
    EXPECT_NEAR(rep.witness->second, 0.5, 1e-12);
}

TEST(Hyp, ZeroProfileValidForEveryAdmissibleParameterSet)
{
    const auto f = Profile::constant(0.0, -5.0, 5.0, 11);
    for (double C : {0.0, 0.5, 3.0}) {
        for (double nu : {0.05, 0.5, 0.95}) {
            for (double M : {0.5, 1.0, 4.0}) {
                for (double theta : {0.1 * M, M, 2.0 * M}) {
                    for (double kappa : {0.01, 1.0}) {
                        EXPECT_TRUE(validate_hyp(f, {C, nu, theta, kappa, M}).valid())
                            << C << " " << nu << " " << theta << " " << kappa << " " << M;
                    }
                }
            }
        }
    }
}

TEST(Hyp, ProfileBelowFloorFails)
{
    const HypParams h{1.0, 0.5, 1.0, 0.7, 1.0};
    const auto f = Profile::constant(-2.0 * h.kappa, -2.0, 2.0, 5);
    const auto rep = validate_hyp(f, h);
    EXPECT_TRUE(rep.growth_ok);
    EXPECT_FALSE(rep.floor_ok);
}

TEST(Hyp, QuadraticProfileViolatesGrowthAtGridEdge)
{
    const auto f = Profile::sampled([](double y) { return y * y; }, -4.0, 4.0, 81);
    const auto rep = validate_hyp(f, {0.0, 0.5, 1.0, 1.0, 1.0});
    EXPECT_FALSE(rep.growth_ok);
    EXPECT_NEAR(std::abs(rep.worst_y), 4.0, 1e-12);
    // 16 - 0.5 * 16 / 2^{2/3}
    EXPECT_NEAR(rep.worst_excess, 16.0 - 8.0 / std::cbrt(4.0), 1e-12);
    EXPECT_NEAR(0.5 * 16.0 / std::cbrt(4.0), 5.0397, 1e-4);
}

TEST(Hyp, GrowthMaximisedInsideSegment)
{
    // a single steep segment: the excess peaks strictly between the nodes
    const Profile f({-1.0, 0.0, 10.0}, {0.0, 0.0, 10.0});
    const HypParams h{1.0, 0.5, 1.0, 1.0, 1.0};
    const auto rep = validate_hyp(f, h);
    const double a = h.nu / std::cbrt(4.0);
    const double ystar = 1.0 / (2.0 * a);
    EXPECT_NEAR(rep.worst_y, ystar, 1e-12);
    EXPECT_NEAR(rep.worst_excess, ystar - h.C - a * ystar * ystar, 1e-12);
}

TEST(Hyp, GridMustCoverWindow)
{
    const auto f = Profile::constant(0.0, -0.5, 0.5, 3);
    EXPECT_THROW(validate_hyp(f, {1.0, 0.5, 0.5, 1.0, 1.0}), DomainError);
}

TEST(Hyp, ParameterValidation)
{
    EXPECT_THROW((HypParams{1.0, 1.0, 1.0, 1.0, 1.0}.validate()), DomainError);
    EXPECT_THROW((HypParams{1.0, 0.5, 3.0, 1.0, 1.0}.validate()), DomainError);
    EXPECT_THROW((HypParams{1.0, 0.5, 1.0, 0.0, 1.0}.validate()), DomainError);
}

TEST(Unscaled, FlatAndZeroProfileGiveZero)
{
    const auto x = linspace(-3.0, 3.0, 13);
    for (const InitialData& d : {InitialData{Flat{}}, InitialData{GeneralScaled{Profile::constant(0.0, -10, 10, 3), {}}}}) {
        const auto h = make_unscaled_initial(d, 0.7, x);
        for (double v : h.h) EXPECT_EQ(v, 0.0);
    }
}

TEST(Unscaled, LinearProfileAtHalfTime)
{
    const auto x = linspace(-2.0, 2.0, 9);
    const auto f = Profile::sampled([](double y) { return y; }, -5.0, 5.0, 11);
    const auto h = make_unscaled_initial(GeneralScaled{f, {}}, 0.5, x);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(h.h[i], 0.7937005259840998 * x[i], 1e-14);
}

TEST(Unscaled, NarrowWedgeIsDeltaMarker)
{
    const auto h = make_unscaled_initial(NarrowWedge{}, 3.0, linspace(-1, 1, 3));
    EXPECT_EQ(h.kind, UnscaledInitial::Kind::Delta);
    EXPECT_TRUE(h.h.empty());
}

TEST(Unscaled, InverseScalingRecoversProfile)
{
    Engine eng = replica_engine(7, 0);
    std::vector<double> yg = linspace(-3.0, 3.0, 25), fv(25);
    for (double& v : fv) v = 4.0 * uniform01(eng) - 2.0;
    fv[3] = kNegInf;
    const Profile f(yg, fv);
    for (double T : {0.3, 1.0, 5.0}) {
        const double scale = std::pow(2.0 * T, 2.0 / 3.0);
        std::vector<double> x;
        for (double y : yg) x.push_back(scale * y);
        const auto h = make_unscaled_initial(GeneralScaled{f, {}}, T, x);
        for (std::size_t i = 0; i < yg.size(); ++i) {
            if (fv[i] == kNegInf) {
                EXPECT_EQ(h.h[i], kNegInf);
            } else {
                EXPECT_NEAR(h.h[i] / std::cbrt(T), fv[i], 1e-13);
            }
        }
    }
}

TEST(Unscaled, BrownianIncrementVariance)
{
    const std::vector<double> x{-2.0, -0.5, 0.0, 1.0, 3.0};
    const std::size_t n = 20000;
    std::vector<double> at_m2, at_3, at_0;
    for (std::size_t r = 0; r < n; ++r) {
        Engine eng = replica_engine(11, r);
        const auto h = make_unscaled_initial(BrownianTwoSided{0, 1.5}, 1.0, x, &eng);
        at_m2.push_back(h.h[0]);
        at_0.push_back(h.h[2]);
        at_3.push_back(h.h[4]);
    }
    auto var = [](const std::vector<double>& v) {
        double s = 0, s2 = 0;
        for (double u : v) s += u, s2 += u * u;
        const double m = s / v.size();
        return s2 / v.size() - m * m;
    };
    for (double v : at_0) EXPECT_EQ(v, 0.0);
    // Var of the sample variance ~ 2 sigma^4 / n
    EXPECT_NEAR(var(at_m2), 1.5 * 2.0, 5 * 3.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(var(at_3), 1.5 * 3.0, 5 * 4.5 * std::sqrt(2.0 / n));
}

TEST(ScaleCenter, ExactCancellations)
{
    for (double T : {0.5, 1.0, 7.0}) {
        EXPECT_NEAR(scale_center_value(-T / 12.0 + (2.0 / 3.0) * std::log(2.0 * T), T, HeightKind::GeneralHeight), 0.0, 1e-15);
        EXPECT_NEAR(scale_center_value(-T / 12.0, T, HeightKind::Upsilon), 0.0, 1e-15);
    }
    EXPECT_NEAR(scale_center_value(0.0, 1.0, HeightKind::GeneralHeight), 1.0 / 12.0 - (2.0 / 3.0) * std::log(2.0), 1e-15);
    EXPECT_NEAR(scale_center_value(0.0, 1.0, HeightKind::GeneralHeight), -0.37876, 1e-5);
}

TEST(ScaleCenter, AffineInHeight)
{
    const std::vector<double> y{-1.0, 0.0, 0.5};
    const std::vector<double> H{0.3, -1.2, 2.0};
    for (double T : {0.25, 2.0, 30.0}) {
        for (double c : {-3.0, 0.1, 5.0}) {
            std::vector<double> Hc(H);
            for (double& v : Hc) v += c;
            const auto a = scale_center_height(H, y, T, HeightKind::BrownianHeight);
            const auto b = scale_center_height(Hc, y, T, HeightKind::BrownianHeight);
            for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(b.values[i] - a.values[i], c / std::cbrt(T), 1e-13);
        }
    }
}

TEST(ScaleCenter, MismatchedGridsThrow)
{
    const std::vector<double> y{0.0, 1.0}, H{1.0};
    EXPECT_THROW(scale_center_height(H, y, 1.0, HeightKind::Upsilon), DomainError);
}
