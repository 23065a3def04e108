#include <cmath>

#include <gtest/gtest.h>

#include "kpz/bridges.hpp"

using namespace kpz;

TEST(Hamiltonian, Examples)
{
    EXPECT_EQ(hamiltonian(0.0, 3.0), 1.0);
    EXPECT_EQ(hamiltonian(kNegInf, 3.0), 0.0);
    EXPECT_NEAR(hamiltonian(1.0, 8.0), std::exp(2.0), 1e-14);
    EXPECT_NEAR(hamiltonian(1.0, 8.0), 7.38906, 1e-5);
    EXPECT_EQ(log_hamiltonian(kNegInf, 1.0), kNegInf);
    EXPECT_NEAR(log_hamiltonian(1.0, 8.0), 2.0, 1e-15);
}

TEST(Bridge, CoarseGridKeepsEndpoints)
{
    BridgeSpec s{0.0, 2.0, 0.3, -1.1, 2.0};
    Engine eng = replica_engine(1, 0);
    const auto p = sample_bridge(s, eng);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p.front(), 0.3);
    EXPECT_EQ(p.back(), -1.1);
}

TEST(Bridge, EndpointsExactOnFineGrid)
{
    BridgeSpec s{1.0, 3.0, 0.5, 2.5, 1.0 / 32.0};
    Engine eng = replica_engine(2, 0);
    const auto p = sample_bridge(s, eng);
    EXPECT_EQ(p.size(), s.intervals() + 1);
    EXPECT_EQ(p.front(), 0.5);
    EXPECT_EQ(p.back(), 2.5);
}

TEST(Bridge, MidpointMeanAndVariance)
{
    BridgeSpec s{0.0, 1.0, 0.0, 0.0, 1.0 / 16.0};
    Engine eng = replica_engine(3, 0);
    const std::size_t n = 100000;
    double m = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = sample_bridge(s, eng)[8];
        m += v;
        m2 += v * v;
    }
    m /= n;
    const double var = m2 / n - m * m;
    EXPECT_NEAR(m, 0.0, 3.0 * std::sqrt(0.25 / n));
    EXPECT_NEAR(var, 0.25, 3.0 * 0.25 * std::sqrt(2.0 / n));
}

TEST(BridgeMinTail, ClosedForms)
{
    const auto a = bridge_min_tail(0.0, 0.0, 1.0, 1.0);
    EXPECT_NEAR(a.bound, std::exp(-2.0), 1e-15);
    EXPECT_NEAR(a.exact, std::exp(-2.0), 1e-15);
    EXPECT_NEAR(a.exact, 0.13534, 1e-5);
    const auto b = bridge_min_tail(0.0, 1.0, 1.0, 1.0);
    EXPECT_NEAR(b.exact, std::exp(-4.0), 1e-15);
    EXPECT_NEAR(b.exact, 0.01832, 1e-5);
    EXPECT_LE(b.exact, b.bound);
    const auto c = bridge_min_tail(0.4, -0.2, 2.0, 0.0);
    EXPECT_EQ(c.exact, 1.0);
    EXPECT_EQ(c.bound, 1.0);
}

TEST(BridgeMinTail, ExactNeverAboveBound)
{
    for (double x : {-1.0, 0.0, 0.5, 2.0}) {
        for (double y : {-0.5, 0.0, 1.5}) {
            for (double L : {0.5, 1.0, 4.0}) {
                for (double s : {0.1, 0.7, 2.0}) {
                    const auto r = bridge_min_tail(x, y, L, s);
                    EXPECT_LE(r.exact, r.bound * (1.0 + 1e-15));
                }
            }
        }
    }
}

TEST(BridgeMinTail, MonteCarloAgrees)
{
    const auto ex = bridge_min_tail(0.0, 0.0, 1.0, 1.0);
    const auto mc = bridge_min_tail_mc(0.0, 0.0, 1.0, 1.0, 100000, 5);
    EXPECT_LE(std::abs(mc.mean - ex.exact), 3.0 * mc.se);
    EXPECT_LE(mc.mean - 3.0 * mc.se, ex.bound);
}

TEST(ParabolaCrossing, BoundExample)
{
    EXPECT_NEAR(bm_parabola_crossing_bound(1.0, 1.0, 1e-12), std::exp(-8.0 / (3.0 * std::sqrt(3.0))) / std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(bm_parabola_crossing_bound(1.0, 1.0, 1e-12), 0.12383, 1e-5);
    EXPECT_LT(bm_parabola_crossing_bound(50.0, 1.0, 0.5), 1e-50);
    EXPECT_THROW(bm_parabola_crossing_bound(1.0, 1.0, 0.0), DomainError);
}

TEST(ParabolaCrossing, MonteCarloBelowBoundForLargeS)
{
    // the bound is asymptotic in s; at s = 2 the crossing probability (about 0.017) still exceeds it
    for (double s : {3.0, 3.5}) {
        const auto mc = bm_parabola_crossing_mc(s, 1.0, 4.0, 40000, 9, 512);
        EXPECT_LE(mc.mean - 3.0 * mc.se, bm_parabola_crossing_bound(s, 1.0, 0.1)) << s;
    }
    const auto mc = bm_parabola_crossing_mc(2.0, 1.0, 4.0, 40000, 9, 512);
    EXPECT_GT(mc.mean - 3.0 * mc.se, bm_parabola_crossing_bound(2.0, 1.0, 0.1));
}

TEST(Reflection, Limits)
{
    EXPECT_EQ(reflection_two_sided_min_bound(0.0, 1.0, 1.0), 1.0);
    for (double m : {5.0, 8.0, 12.0}) EXPECT_LE(reflection_two_sided_min_bound(m, 1.0, 1.0), 2.0 * std::exp(-m * m / 32.0));
}

TEST(Reflection, MonteCarloOracle)
{
    const double sigma2 = std::cbrt(2.0), w = 1.0, m = 1.0;
    Engine eng = replica_engine(13, 0);
    const std::size_t n = 1000000;
    std::size_t hits = 0;
    const double tau = std::sqrt(sigma2 * w);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = tau * standard_normal(eng), b = tau * standard_normal(eng);
        hits += 2.0 * std::abs(a) + 2.0 * std::abs(b) >= m;
    }
    const double p = static_cast<double>(hits) / n, se = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(reflection_two_sided_min_bound(m, w, sigma2), p, 3.0 * se);
}

TEST(Gibbs, NegInfBoundaryReproducesFreeBridge)
{
    GibbsSpec spec;
    const auto g = gibbs_resample(spec, 200, 21, true);
    EXPECT_EQ(g.stats.acceptance_rate(), 1.0);
    Engine eng = replica_engine(21, 0, 3);
    for (const auto& p : g.paths) EXPECT_EQ(p, sample_bridge(spec.bridge, eng));
}

TEST(Gibbs, FarBoundaryBarelyRejects)
{
    GibbsSpec spec;
    spec.bridge.x = 0.3;
    spec.bridge.y = -0.2;
    spec.g = GibbsSpec::line(spec.bridge, -20.2, -20.2);
    const auto g = gibbs_resample(spec, 5000, 4);
    EXPECT_GT(g.stats.acceptance_rate(), 0.99);
}

TEST(Gibbs, WeightIsAtMostOne)
{
    GibbsSpec spec;
    spec.g = GibbsSpec::line(spec.bridge, 0.5, -1.0);
    Engine eng = replica_engine(8, 0);
    for (int i = 0; i < 100; ++i) {
        const double w = gibbs_weight(spec, sample_bridge(spec.bridge, eng));
        EXPECT_GT(w, 0.0);
        EXPECT_LE(w, 1.0);
    }
}

TEST(Gibbs, ImpossibleBoundaryIsReported)
{
    GibbsSpec spec;
    spec.T = 8.0;
    spec.g = GibbsSpec::line(spec.bridge, 6.0, 6.0);
    EXPECT_THROW(gibbs_resample(spec, 10, 1, false, 1e-4, 20000), BoundaryTooConstraining);
}

TEST(Gibbs, SpecValidation)
{
    GibbsSpec spec;
    spec.g = {0.0, 1.0};
    EXPECT_THROW(spec.validate(), DomainError);
    spec.g.clear();
    spec.T = 0.0;
    EXPECT_THROW(spec.validate(), DomainError);
}

TEST(Dominance, IdenticalSpecsAreConsistent)
{
    GibbsSpec spec;
    spec.g = GibbsSpec::line(spec.bridge, -0.5, -0.5);
    const auto rep = dominance_test(spec, spec, 20000, 3);
    EXPECT_TRUE(rep.dominated);
}

TEST(Dominance, ShiftedEndpointsAndRaisedFloor)
{
    GibbsSpec a, b;
    a.bridge.x = a.bridge.y = 1.0;
    EXPECT_TRUE(dominance_test(a, b, 20000, 5).dominated);
    GibbsSpec c, d;
    c.g = GibbsSpec::line(c.bridge, 0.5, 0.5);
    d.g = GibbsSpec::line(d.bridge, -0.5, -0.5);
    EXPECT_TRUE(dominance_test(c, d, 20000, 6).dominated);
}

TEST(Dominance, DetectsReversedOrder)
{
    std::vector<double> lo, hi;
    Engine eng = replica_engine(4, 0);
    for (int i = 0; i < 5000; ++i) {
        lo.push_back(standard_normal(eng));
        hi.push_back(standard_normal(eng) + 0.3);
    }
    EXPECT_TRUE(dominance_from_samples(hi, lo).dominated);
    EXPECT_FALSE(dominance_from_samples(lo, hi).dominated);
}

TEST(Dominance, RejectsUnorderedSpecs)
{
    GibbsSpec a, b;
    b.bridge.x = 1.0;
    EXPECT_THROW(dominance_test(a, b, 10, 1), DomainError);
}
