#include <cmath>

#include <gtest/gtest.h>

#include "kpz/she.hpp"

using namespace kpz;

namespace {

SolverConfig quiet(double half_width = 0.0)
{
    SolverConfig c;
    c.noise = false;
    c.half_width = half_width;
    return c;
}

double heat_kernel(double x, double t) { return std::exp(-x * x / (2.0 * t)) / std::sqrt(2.0 * kPi * t); }

std::vector<double> normals(std::size_t n, std::uint64_t seed, double shift = 0.0)
{
    Engine eng = replica_engine(seed, 0);
    std::vector<double> v(n);
    for (double& x : v) x = standard_normal(eng) + shift;
    return v;
}

}  // namespace

TEST(SolverConfig, RejectsUnstableStep)
{
    SolverConfig c;
    c.dt = 0.6 * c.dx * c.dx;
    EXPECT_THROW(c.validate(), ConfigError);
    c.dt = 0.5 * c.dx * c.dx;
    EXPECT_NO_THROW(c.validate());
    EXPECT_DOUBLE_EQ(SolverConfig{}.resolved_dt(), 0.25 * 0.05 * 0.05);
}

TEST(SolverConfig, AutoHalfWidthGrowsWithTimeAndWindow)
{
    const SolverConfig c;
    EXPECT_LT(auto_half_width(c, 1.0), auto_half_width(c, 2.0));
    EXPECT_NEAR(auto_half_width(c, 2.0, 3.0) - auto_half_width(c, 2.0), 3.0, c.dx + 1e-12);
    // 2 * Phi-bar(z) = 1e-8 gives z = 5.7307
    EXPECT_NEAR(auto_half_width(c, 2.0), 10 * 0.05 + 5.7307 * std::sqrt(2.0), 0.051);
}

TEST(She, FlatWithoutNoiseStaysOne)
{
    SheSolver s(quiet(), 1.0, 3.0);
    const auto f = s.run(Flat{}, 0.5, 0);
    const std::size_t mid = f.size() / 2;
    // Dirichlet ends only influence sites within a few sqrt(t) of the boundary
    for (std::size_t i = mid - 60; i <= mid + 60; ++i) EXPECT_NEAR(f.Z[i], 1.0, 1e-8);
}

TEST(She, NarrowWedgeWithoutNoiseIsHeatKernel)
{
    SheSolver s(quiet(), 1.0);
    const auto f = s.run(NarrowWedge{}, 0.5, 0);
    const double peak = heat_kernel(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(f.Z[i] - heat_kernel(f.x(i), 1.0)));
    EXPECT_LE(worst, 0.02 * peak);
    EXPECT_NEAR(f.at(0.0), peak, 0.02 * peak);
}

TEST(She, MassConservedWithoutNoise)
{
    SheSolver s(quiet(12.0), 1.0);
    std::vector<double> masses;
    std::vector<std::size_t> obs;
    for (std::size_t k = 0; k <= s.steps(); k += s.steps() / 8) obs.push_back(k);
    s.run(NarrowWedge{}, 0.5, 0, obs, [&](std::size_t, const LatticeField& f) { masses.push_back(f.mass()); });
    ASSERT_GE(masses.size(), 8u);
    for (double m : masses) EXPECT_NEAR(m / masses.front(), 1.0, 1e-10);
    EXPECT_NEAR(masses.front(), 1.0, 1e-12);
}

TEST(She, NoisyFieldStaysPositive)
{
    SolverConfig c;
    c.seed = 3;
    SheSolver s(c, 2.0);
    for (std::uint64_t r = 0; r < 5; ++r) {
        const auto f = s.run(NarrowWedge{}, 1.0, r);
        for (std::size_t i = 1; i + 1 < f.size(); ++i) ASSERT_GT(f.Z[i], 0.0);
    }
}

TEST(She, NoiseTableHasUnitMean)
{
    const NoiseFactorTable t(0.3);
    double m = 0.0;
    for (std::size_t j = 0; j < NoiseFactorTable::kSize; ++j) m += t[j];
    EXPECT_NEAR(m / NoiseFactorTable::kSize, 1.0, 1e-13);
    for (std::size_t j = 1; j < NoiseFactorTable::kSize; ++j) ASSERT_GT(t[j], t[j - 1]);
}

TEST(She, FirstMomentOracleSmallRun)
{
    SolverConfig c;
    c.seed = 99;
    const double T = 0.5;
    const auto m = sample_log_field(NarrowWedge{}, T, {{2.0 * T, 0.0}}, 2000, c);
    auto z = m.column(0);
    for (double& v : z) v = std::exp(v);
    const auto est = stats::mean_se(z);
    EXPECT_LE(std::abs(est.mean - 1.0 / (2.0 * std::sqrt(kPi * T))), 3.0 * est.se);
}

TEST(She, ReplicaStreamsAreIndependentOfScheduling)
{
    SolverConfig c;
    c.seed = 5;
    const std::vector<SpaceTimePoint> pts{{0.5, 0.0}, {1.0, 0.3}};
    const auto all = sample_log_field(NarrowWedge{}, 0.5, pts, 6, c);
    const auto tail = sample_log_field(NarrowWedge{}, 0.5, pts, 3, c, 3);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(all(r + 3, k), tail(r, k));
    }
    const auto again = sample_log_field(NarrowWedge{}, 0.5, pts, 6, c);
    EXPECT_EQ(all.data, again.data);
}

TEST(She, BoundaryDiagnosticMeetsRule)
{
    SolverConfig c;
    SimulationDiagnostics d;
    sample_log_field(NarrowWedge{}, 1.0, {{2.0, 0.0}}, 20, c, 0, &d);
    EXPECT_TRUE(d.boundary_ok);
    EXPECT_LT(d.edge_mass_fraction, c.boundary_tol);
}

TEST(ColeHopf, Examples)
{
    LatticeField f;
    f.Z.assign(5, 1.0);
    for (double h : cole_hopf(f)) EXPECT_EQ(h, 0.0);
    f.Z.assign(5, std::exp(1.0));
    for (double h : cole_hopf(f)) EXPECT_NEAR(h, 1.0, 1e-15);
    f.Z = {heat_kernel(0.0, 1.0)};
    EXPECT_NEAR(cole_hopf(f)[0], -0.91894, 1e-5);
    f.Z = {1.0, 0.0, 1.0};
    EXPECT_THROW(cole_hopf(f), NumericalFault);
}

TEST(Convolution, ConstantUpsilonOnInterval)
{
    const double c = 0.7, a = 1.5;
    for (double T : {0.5, 1.0, 8.0}) {
        ScaledHeightSample u{T, linspace(-4.0, 4.0, 161), std::vector<double>(161, c), HeightKind::Upsilon};
        const Profile f({-a, a}, {0.0, 0.0});
        const auto r = convolve_upsilon_with_f(u, f, T);
        EXPECT_NEAR(r.value, c + std::log(2.0 * a) / std::cbrt(T), 1e-12);
        EXPECT_FALSE(r.truncation_warning);
    }
}

TEST(Convolution, NarrowSupportLimit)
{
    const double T = 2.0, w = 1e-3;
    const auto y = linspace(-3.0, 3.0, 601);
    std::vector<double> v;
    for (double t : y) v.push_back(0.3 - t * t / std::cbrt(4.0) + 0.2 * std::sin(3.0 * t));
    ScaledHeightSample u{T, y, v, HeightKind::Upsilon};
    const Profile f({-w / 2, w / 2}, {0.0, 0.0});
    EXPECT_NEAR(convolve_upsilon_with_f(u, f, T).value, 0.3 + std::log(w) / std::cbrt(T), 1e-4);
}

TEST(Convolution, FlatProfileGaussianIntegral)
{
    const auto y = linspace(-12.0, 12.0, 4801);
    std::vector<double> v;
    for (double t : y) v.push_back(-t * t / std::cbrt(4.0));
    ScaledHeightSample u{1.0, y, v, HeightKind::Upsilon};
    const auto r = convolve_upsilon_with_f(u, Profile::constant(0.0, -20.0, 20.0, 3), 1.0);
    EXPECT_NEAR(r.value, std::log(std::cbrt(2.0) * std::sqrt(kPi)), 1e-6);
    EXPECT_NEAR(r.value, 0.803414, 1e-6);
    EXPECT_FALSE(r.truncation_warning);
}

TEST(Convolution, WarnsWhenIntegrandReachesGridEdge)
{
    ScaledHeightSample u{1.0, linspace(-2.0, 2.0, 41), std::vector<double>(41, 0.0), HeightKind::Upsilon};
    const auto r = convolve_upsilon_with_f(u, Profile::constant(0.0, -5.0, 5.0, 3), 1.0);
    EXPECT_TRUE(r.truncation_warning);
}

TEST(Convolution, RejectsNonUpsilonSamples)
{
    ScaledHeightSample u{1.0, {-1.0, 1.0}, {0.0, 0.0}, HeightKind::GeneralHeight};
    EXPECT_THROW(convolve_upsilon_with_f(u, Profile::constant(0.0, -1, 1, 2), 1.0), DomainError);
}

TEST(Stationarity, IdenticalSamplesGiveZeroStatistic)
{
    const auto a = normals(2000, 1);
    const auto rep = stationarity_report({0.0, 1.0}, {a, a});
    EXPECT_EQ(rep.pairs.at(0).ks.statistic, 0.0);
    EXPECT_EQ(rep.min_p_value, 1.0);
}

TEST(Stationarity, InjectedShiftIsDetected)
{
    const auto rep = stationarity_report({0.0, 1.0}, {normals(10000, 1), normals(10000, 2, 0.5)});
    EXPECT_LT(rep.min_p_value, 1e-6);
}

TEST(Stationarity, ParabolaShift)
{
    SampleMatrix m{2, 2, {0.0, 0.0, 1.0, 1.0}};
    const auto cols = parabola_shifted_columns(m, {0.0, 2.0});
    EXPECT_EQ(cols[0][1], 1.0);
    EXPECT_NEAR(cols[1][0], 4.0 / std::cbrt(4.0), 1e-15);
}

TEST(Fkg, SingleEventJointEqualsMarginal)
{
    SampleMatrix m{4, 1, {0.1, 0.5, 0.9, 1.3}};
    const auto e = fkg_joint_vs_product(m, {0.6}, EventSide::AtMost);
    EXPECT_DOUBLE_EQ(e.joint, 0.5);
    EXPECT_DOUBLE_EQ(e.product, 0.5);
}

TEST(Fkg, SureEventsGiveOne)
{
    SampleMatrix m{3, 2, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}};
    const auto e = fkg_joint_vs_product(m, {kPosInf, kPosInf}, EventSide::AtMost);
    EXPECT_EQ(e.joint, 1.0);
    EXPECT_EQ(e.product, 1.0);
    EXPECT_TRUE(e.degenerate);
}

TEST(Fkg, DetectsCorrelationSign)
{
    const std::size_t n = 10000;
    const auto a = normals(n, 3), b = normals(n, 4);
    SampleMatrix pos{n, 2, {}}, neg{n, 2, {}};
    for (std::size_t i = 0; i < n; ++i) {
        pos.data.push_back(a[i]);
        pos.data.push_back(0.8 * a[i] + 0.6 * b[i]);
        neg.data.push_back(a[i]);
        neg.data.push_back(-0.8 * a[i] + 0.6 * b[i]);
    }
    for (EventSide side : {EventSide::AtMost, EventSide::Above}) {
        EXPECT_TRUE(fkg_joint_vs_product(pos, {0.0, 0.0}, side).satisfied());
        EXPECT_FALSE(fkg_joint_vs_product(neg, {0.0, 0.0}, side).satisfied());
    }
}

TEST(Fkg, SharedNoiseSimulationSatisfiesInequality)
{
    SolverConfig c;
    c.seed = 17;
    const auto m = sample_log_field(NarrowWedge{}, 1.0, {{2.0, 0.0}, {2.0, 0.5}}, 1500, c);
    const std::vector<double> levels{stats::quantile(m.column(0), 0.5), stats::quantile(m.column(1), 0.5)};
    EXPECT_TRUE(fkg_joint_vs_product(m, levels, EventSide::AtMost).satisfied());
    EXPECT_TRUE(fkg_joint_vs_product(m, levels, EventSide::Above).satisfied());
}
