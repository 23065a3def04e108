#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace kpz {

/// xoshiro256++ (Blackman and Vigna); a UniformRandomBitGenerator several times faster than
/// std::mt19937_64 in the lattice noise loop.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::seed_seq& seq)
    {
        std::array<std::uint32_t, 8> w{};
        seq.generate(w.begin(), w.end());
        for (std::size_t i = 0; i < 4; ++i) s_[i] = (std::uint64_t{w[2 * i]} << 32) | w[2 * i + 1];
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9e3779b97f4a7c15ULL;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()()
    {
        const std::uint64_t out = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return out;
    }

    bool operator==(const Xoshiro256pp&) const = default;

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_{};
};

using Engine = Xoshiro256pp;

/// Independent stream for replica `replica` of a run seeded with `master`.
/// The stream depends only on the pair, so replicas can be scheduled in any order.
inline Engine replica_engine(std::uint64_t master, std::uint64_t replica, std::uint32_t salt = 0)
{
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32),
                      salt, 0x6b707a74u};
    return Engine(seq);
}

inline double uniform01(Engine& eng)
{
    // 53 random bits -> (0, 1)
    return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal by inversion of a 53-bit uniform. Deterministic across standard libraries,
/// unlike std::normal_distribution.
inline double standard_normal(Engine& eng)
{
    static const boost::math::normal_distribution<double> unit;
    return boost::math::quantile(unit, uniform01(eng));
}

/// Standard normal via the Marsaglia polar method; faster than inversion, used in hot loops.
class PolarNormal {
public:
    double operator()(Engine& eng)
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01(eng) - 1.0;
            v = 2.0 * uniform01(eng) - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Lookup table of the multiplicative noise factor exp(sigma*g - sigma^2/2) at the
/// 2^16 midpoint quantiles of g ~ N(0,1), renormalised to mean exactly one.
/// One 64-bit draw indexes four lattice sites.
class NoiseFactorTable {
public:
    static constexpr std::size_t kBits = 16;
    static constexpr std::size_t kSize = std::size_t{1} << kBits;

    explicit NoiseFactorTable(double sigma) : sigma_(sigma), factors_(kSize)
    {
        const boost::math::normal_distribution<double> unit;
        double sum = 0.0;
        for (std::size_t j = 0; j < kSize; ++j) {
            const double p = (static_cast<double>(j) + 0.5) / static_cast<double>(kSize);
            const double g = boost::math::quantile(unit, p);
            factors_[j] = std::exp(sigma * g - 0.5 * sigma * sigma);
            sum += factors_[j];
        }
        const double mean = sum / static_cast<double>(kSize);
        for (double& f : factors_) f /= mean;
    }

    double sigma() const { return sigma_; }
    const double* data() const { return factors_.data(); }
    double operator[](std::size_t j) const { return factors_[j]; }

private:
    double sigma_;
    std::vector<double> factors_;
};

}  // namespace kpz
