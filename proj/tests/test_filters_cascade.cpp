#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wavext/cascade.hpp"
#include "wavext/filters.hpp"

using namespace wavext;

namespace {

std::vector<FilterBank> all_banks()
{
    std::vector<FilterBank> v;
    for (int p = 1; p <= 10; ++p) v.push_back(daubechies_filter(p));
    for (int p = 1; p <= 6; ++p)
        for (int pd = p % 2 == 0 ? 2 : 1; p + pd <= 12; pd += 2) v.push_back(cdf_filter(p, pd));
    return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size()) return INFINITY;
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

} // namespace

TEST(Filters, Db2MatchesClosedForm)
{
    const double s3 = std::sqrt(3.0), c = 4 * std::numbers::sqrt2;
    const std::vector<double> ref{(1 + s3) / c, (3 + s3) / c, (3 - s3) / c, (1 - s3) / c};
    const auto bank = daubechies_filter(2);
    EXPECT_EQ(bank.h.offset, 0);
    EXPECT_LT(max_abs_diff(bank.h.taps, ref), 1e-14);
    EXPECT_TRUE(bank.orthogonal());
}

TEST(Filters, HaarTaps)
{
    const auto bank = daubechies_filter(1);
    ASSERT_EQ(bank.h.size(), 2);
    EXPECT_NEAR(bank.h.taps[0], std::numbers::sqrt2 / 2, 1e-15);
    EXPECT_NEAR(bank.h.taps[1], std::numbers::sqrt2 / 2, 1e-15);
}

TEST(Filters, Cdf22DualIsFiveTapMask)
{
    const auto bank = cdf_filter(2, 2);
    const double c = 4 * std::numbers::sqrt2;
    EXPECT_EQ(bank.h_dual.first(), -2);
    EXPECT_LT(max_abs_diff(bank.h_dual.taps, {-1 / c, 2 / c, 6 / c, 2 / c, -1 / c}), 1e-14);
    EXPECT_EQ(bank.h.first(), -1);
    EXPECT_LT(max_abs_diff(bank.h.taps, {std::numbers::sqrt2 / 4, std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 4}), 1e-15);
}

TEST(Filters, CdfPrimalIsScaledBinomial)
{
    for (int p = 1; p <= 6; ++p) {
        const auto bank = cdf_filter(p, p % 2 == 0 ? 2 : 1);
        ASSERT_EQ(bank.h.size(), p + 1);
        for (int k = 0; k <= p; ++k) {
            double binom = 1;
            for (int i = 0; i < k; ++i) binom = binom * (p - i) / (i + 1);
            EXPECT_EQ(bank.h.taps[static_cast<std::size_t>(k)], std::numbers::sqrt2 * binom / std::ldexp(1.0, p));
        }
    }
}

TEST(Filters, AllBanksPassValidation)
{
    for (const auto& bank : all_banks()) {
        const auto rep = validate(bank, 1e-12);
        for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << bank.name() << " " << c.name << " " << c.violation;
    }
}

TEST(Filters, DoubleShiftBiorthogonalityBruteForce)
{
    for (const auto& bank : all_banks()) {
        for (index_t n = -12; n <= 12; ++n) {
            double s = 0;
            for (index_t k = bank.h.first(); k <= bank.h.last(); ++k) s += bank.h[k] * bank.h_dual[k + 2 * n];
            EXPECT_NEAR(s, n == 0 ? 1.0 : 0.0, 1e-12) << bank.name() << " n=" << n;
        }
    }
}

TEST(Filters, AlternatingFlipIsExact)
{
    for (const auto& bank : all_banks()) {
        for (index_t k = bank.g.first(); k <= bank.g.last(); ++k) {
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            EXPECT_EQ(bank.g[k], sign * bank.h_dual[1 - k]);
        }
        for (index_t k = bank.g_dual.first(); k <= bank.g_dual.last(); ++k) {
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            EXPECT_EQ(bank.g_dual[k], sign * bank.h[1 - k]);
        }
    }
}

TEST(Filters, DaubechiesWaveletMoments)
{
    for (int p = 1; p <= 10; ++p) {
        const auto bank = daubechies_filter(p);
        for (int m = 0; m < p; ++m) {
            double s = 0, scale = 0;
            for (index_t k = bank.g.first(); k <= bank.g.last(); ++k) {
                s += bank.g[k] * std::pow(static_cast<double>(k), m);
                scale += std::abs(bank.g[k] * std::pow(static_cast<double>(k), m));
            }
            EXPECT_LT(std::abs(s) / scale, 1e-10) << "db" << p << " m=" << m;
        }
    }
}

TEST(Filters, PerturbedTapFailsDoubleShift)
{
    auto bank = cdf_filter(2, 2);
    bank.h.taps[0] += 1e-3;
    const auto rep = validate(bank, 1e-12);
    EXPECT_FALSE(rep.all_pass());
    const auto* c = rep.find("double_shift");
    ASSERT_NE(c, nullptr);
    EXPECT_FALSE(c->pass);
    EXPECT_GT(c->violation, 1e-4);
    EXPECT_LT(c->violation, 1e-2);
}

TEST(Filters, RejectsBadOrders)
{
    EXPECT_THROW(daubechies_filter(0), ConfigError);
    EXPECT_THROW(daubechies_filter(11), ConfigError);
    EXPECT_THROW(cdf_filter(3, 2), ConfigError);
    EXPECT_THROW(cdf_filter(7, 7), ConfigError);
    EXPECT_THROW(make_filter("sym4"), ConfigError);
}

TEST(Filters, MakeFilterNames)
{
    EXPECT_EQ(make_filter("db3").name(), "db3");
    EXPECT_EQ(make_filter("cdf(3,5)").name(), "cdf35");
    EXPECT_EQ(make_filter("cdf", 4, 2).name(), "cdf42");
}

TEST(Cascade, Db2IntegerValues)
{
    const auto s = scaling_at_integers(daubechies_filter(2).h);
    EXPECT_NEAR(s.at(0), 0.0, 1e-14);
    EXPECT_NEAR(s.at(1), (1 + std::sqrt(3.0)) / 2, 1e-12);  // 1.3660254...
    EXPECT_NEAR(s.at(2), (1 - std::sqrt(3.0)) / 2, 1e-12);  // -0.3660254...
    EXPECT_NEAR(s.at(3), 0.0, 1e-14);
}

TEST(Cascade, Db2HalfIntegers)
{
    const auto s = scaling_at_level(daubechies_filter(2).h, 1);
    const double s3 = std::sqrt(3.0);
    EXPECT_NEAR(s.at(1), (2 + s3) / 4, 1e-12);
    EXPECT_NEAR(s.at(3), 0.0, 1e-12);
    EXPECT_NEAR(s.at(5), (2 - s3) / 4, 1e-12);
}

TEST(Cascade, HaarLeftContinuous)
{
    const auto h = daubechies_filter(1).h;
    const auto s0 = scaling_at_integers(h);
    EXPECT_EQ(s0.at(0), 1.0);
    EXPECT_EQ(s0.at(1), 0.0);
    const auto s1 = refine(s0, h);
    EXPECT_NEAR(s1.at(1), 1.0, 1e-15);  // phi(1/2)
}

TEST(Cascade, HaarWavelet)
{
    const auto psi = wavelet_at_dyadic(daubechies_filter(1), 3);
    for (index_t i = 0; i < 8; ++i) EXPECT_NEAR(psi.at(i), i < 4 ? 1.0 : -1.0, 1e-14) << i;
    EXPECT_EQ(psi.at(8), 0.0);
}

TEST(Cascade, BsplineFamiliesMatchClosedForm)
{
    for (int p = 2; p <= 4; ++p) {
        const auto bank = cdf_filter(p, p % 2 == 0 ? 2 : 1);
        const auto s = scaling_at_level(bank.h, 4);
        for (index_t i = s.first; i <= s.last(); ++i) {
            const double t = std::ldexp(static_cast<double>(i), -4);
            // centered B-spline of order p by the truncated-power formula
            const double x = t - bank.h.first();
            double ref = 0, fact = 1;
            for (int k = 1; k < p; ++k) fact *= k;
            for (int k = 0; k <= p; ++k) {
                double binom = 1;
                for (int j = 0; j < k; ++j) binom = binom * (p - j) / (j + 1);
                const double u = x - k;
                if (u > 0) ref += ((k % 2) ? -1.0 : 1.0) * binom * std::pow(u, p - 1);
            }
            ref /= fact;
            EXPECT_NEAR(s.at(i), ref, 1e-12) << "p=" << p << " t=" << t;
        }
    }
}

TEST(Cascade, RefinementConsistency)
{
    // level 3 refined once versus level 4 from scratch
    const auto h = daubechies_filter(2).h;
    const auto a = refine(scaling_at_level(h, 3), h);
    const auto b = scaling_at_level(h, 4);
    ASSERT_EQ(a.first, b.first);
    EXPECT_LT(max_abs_diff(a.values, b.values), 1e-12);
}

TEST(Cascade, PartitionOfUnity)
{
    for (const auto& bank : all_banks()) {
        if (bank.family == Family::daubechies && bank.p > 6) continue;
        const int L = 5;
        const auto s = scaling_at_level(bank.h, L);
        const index_t step = index_t{1} << L;
        for (index_t r = 0; r < step; ++r) {
            double sum = 0;
            for (index_t i = s.first; i <= s.last(); ++i)
                if (pmod(i - r, step) == 0) sum += s.at(i);
            EXPECT_NEAR(sum, 1.0, 1e-8) << bank.name() << " r=" << r;
        }
    }
}

TEST(Cascade, DaubechiesSupportLength)
{
    for (int p = 2; p <= 6; ++p) {
        const auto s = scaling_at_level(daubechies_filter(p).h, 3);
        index_t lo = s.last(), hi = s.first;
        for (index_t i = s.first; i <= s.last(); ++i)
            if (std::abs(s.at(i)) > 1e-13) {
                lo = std::min(lo, i);
                hi = std::max(hi, i);
            }
        // nonzero samples lie strictly inside [0, 2p-1]
        EXPECT_GT(lo, 0);
        EXPECT_LT(hi, (2 * p - 1) * 8);
        EXPECT_GT(hi, (2 * p - 2) * 8);
    }
}

TEST(Cascade, WaveletZeroMoment)
{
    const auto psi = wavelet_at_dyadic(daubechies_filter(2), 6);
    double s = 0;
    for (double v : psi.values) s += v;
    EXPECT_LT(std::abs(s) / 64.0, 1e-8);
}

TEST(Cascade, Cdf22WaveletIsPiecewiseLinear)
{
    // second differences vanish away from the half-integer knots
    const auto psi = wavelet_at_dyadic(cdf_filter(2, 2), 3);
    for (index_t i = psi.first + 1; i < psi.last(); ++i) {
        if (pmod(i, 4) == 0) continue;
        EXPECT_NEAR(psi.at(i - 1) - 2 * psi.at(i) + psi.at(i + 1), 0.0, 1e-12) << i;
    }
    // g has taps -1..3, so psi lives on [-1, 2]
    index_t lo = psi.last(), hi = psi.first;
    for (index_t i = psi.first; i <= psi.last(); ++i)
        if (std::abs(psi.at(i)) > 1e-14) {
            lo = std::min(lo, i);
            hi = std::max(hi, i);
        }
    EXPECT_EQ(hi - lo, 3 * 8 - 2);
}
