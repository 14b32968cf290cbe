#pragma once

// Refinement and wavelet masks for Daubechies and B-spline-primal CDF
// multiresolution analyses.
//
// Convention: masks are stored so that the two-scale relation reads
//     phi(t) = sqrt(2) * sum_k h_k phi(2t - k),
// hence sum_k h_k = sqrt(2). The DWT steps apply the stored taps directly.
//
// Note on naming: "cdf p pt" here always means the B-spline-primal family
// with a centered B-spline of order p as primal father function and pt dual
// vanishing moments. In particular cdf44 is NOT the JPEG2000 9/7 pair.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"

namespace wavext {

struct Mask {
    index_t offset = 0;          ///< index of the first tap
    std::vector<double> taps;

    index_t first() const { return offset; }
    index_t last() const { return offset + static_cast<index_t>(taps.size()) - 1; }
    index_t size() const { return static_cast<index_t>(taps.size()); }

    double operator[](index_t k) const
    {
        if (k < offset || k > last()) return 0.0;
        return taps[static_cast<std::size_t>(k - offset)];
    }

    double sum() const
    {
        double s = 0;
        for (double t : taps) s += t;
        return s;
    }

    friend bool operator==(const Mask&, const Mask&) = default;
};

enum class Family { daubechies, cdf };

struct FilterBank {
    Mask h, g, h_dual, g_dual;
    Family family = Family::daubechies;
    int p = 1;        ///< primal order (vanishing moments of the dual wavelet)
    int p_dual = 1;   ///< vanishing moments of the primal wavelet

    bool orthogonal() const { return h == h_dual; }

    std::string name() const
    {
        if (family == Family::daubechies) return "db" + std::to_string(p);
        if (p < 10 && p_dual < 10) return "cdf" + std::to_string(p) + std::to_string(p_dual);
        return "cdf(" + std::to_string(p) + "," + std::to_string(p_dual) + ")";
    }
};

namespace detail {

inline double sign_pow(index_t k) { return (k % 2 == 0) ? 1.0 : -1.0; }

/// x_k = (-1)^k m_{1-k}
inline Mask alternating_flip(const Mask& m)
{
    Mask out;
    out.offset = 1 - m.last();
    out.taps.resize(m.taps.size());
    for (index_t k = out.first(); k <= out.last(); ++k)
        out.taps[static_cast<std::size_t>(k - out.offset)] = sign_pow(k) * m[1 - k];
    return out;
}

inline std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

inline double binomial(int n, int k)
{
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// Coefficients of ((1+z)/2)^n in ascending powers.
inline std::vector<double> binomial_mask(int n)
{
    std::vector<double> c(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) c[static_cast<std::size_t>(k)] = binomial(n, k) / std::ldexp(1.0, n);
    return c;
}

/// Halfband polynomial P_K(y) = sum_{k<K} C(K-1+k, k) y^k.
inline std::vector<double> halfband_poly(int K)
{
    std::vector<double> c(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) c[static_cast<std::size_t>(k)] = binomial(K - 1 + k, k);
    return c;
}

/// Roots of a real polynomial (ascending coefficients) via the companion
/// matrix, polished by Newton iterations in complex arithmetic.
inline std::vector<std::complex<double>> poly_roots(const std::vector<double>& c)
{
    const int n = static_cast<int>(c.size()) - 1;
    std::vector<std::complex<double>> roots;
    if (n < 1) return roots;
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[static_cast<std::size_t>(i)] / c[static_cast<std::size_t>(n)];
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    for (int i = 0; i < n; ++i) roots.push_back(es.eigenvalues()[i]);
    for (auto& r : roots) {
        for (int it = 0; it < 20; ++it) {
            std::complex<double> p = 0, dp = 0;
            for (int k = n; k >= 0; --k) {
                dp = dp * r + p;
                p = p * r + c[static_cast<std::size_t>(k)];
            }
            if (std::abs(dp) == 0.0) break;
            auto step = p / dp;
            r -= step;
            if (std::abs(step) <= 1e-17 * std::max(1.0, std::abs(r))) break;
        }
    }
    return roots;
}

} // namespace detail

/// Orthonormal Daubechies mask with p vanishing moments and 2p taps,
/// obtained by spectral factorization of the halfband polynomial.
inline FilterBank daubechies_filter(int p)
{
    if (p < 1 || p > 10)
        throw ConfigError("unsupported Daubechies order " + std::to_string(p) + " (supported: 1..10)");

    // h(z) = c (1+z)^p prod_i (z - z_i) where each root y_i of P_p(y) with
    // y = (2 - z - 1/z)/4 contributes the root z_i outside the unit circle
    // (ascending-power convention reproduces the usual db2 orientation).
    std::vector<std::complex<double>> poly{1.0};
    auto mul_linear = [&](std::complex<double> root) {
        std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i + 1] += poly[i];
            next[i] -= root * poly[i];
        }
        poly = std::move(next);
    };
    for (int i = 0; i < p; ++i) mul_linear(-1.0);
    for (auto y : detail::poly_roots(detail::halfband_poly(p))) {
        // z^2 - (2 - 4y) z + 1 = 0
        auto bcoef = 2.0 - 4.0 * y;
        auto disc = std::sqrt(bcoef * bcoef - 4.0);
        auto z1 = (bcoef + disc) / 2.0;
        auto z2 = (bcoef - disc) / 2.0;
        mul_linear(std::abs(z1) > 1.0 ? z1 : z2);
    }

    Mask h;
    h.offset = 0;
    h.taps.resize(poly.size());
    double s = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        h.taps[i] = poly[i].real();
        s += h.taps[i];
    }
    for (auto& t : h.taps) t *= std::numbers::sqrt2 / s;

    FilterBank bank;
    bank.family = Family::daubechies;
    bank.p = p;
    bank.p_dual = p;
    bank.h = h;
    bank.h_dual = h;
    bank.g = detail::alternating_flip(bank.h_dual);
    bank.g_dual = detail::alternating_flip(bank.h);
    return bank;
}

/// B-spline-primal biorthogonal CDF bank: primal father function is the
/// centered B-spline of order p, the dual mask carries p_dual dual
/// vanishing moments. Requires p + p_dual even and p + p_dual <= 12.
inline FilterBank cdf_filter(int p, int p_dual)
{
    if (p < 1 || p_dual < 1)
        throw ConfigError("cdf orders must be positive");
    if ((p + p_dual) % 2 != 0)
        throw ConfigError("cdf" + std::to_string(p) + std::to_string(p_dual) +
                          ": p + p_dual must be even");
    if (p + p_dual > 12)
        throw ConfigError("cdf orders too large (p + p_dual <= 12)");

    const double r2 = std::numbers::sqrt2;

    Mask h;
    h.offset = -(p / 2);
    h.taps = detail::binomial_mask(p);
    for (auto& t : h.taps) t *= r2;

    // h_dual(z) = sqrt2 * ((1+z)/2)^pt * P_K((2 - z - 1/z)/4),  K = (p+pt)/2
    const int K = (p + p_dual) / 2;
    std::vector<double> pk{1.0};  // Laurent polynomial, offset -(deg)
    const std::vector<double> y_poly{-0.25, 0.5, -0.25};  // (2 - z - 1/z)/4 at z^-1, z^0, z^1
    std::vector<double> y_pow{1.0};
    std::vector<double> acc(static_cast<std::size_t>(2 * (K - 1) + 1), 0.0);
    auto hb = detail::halfband_poly(K);
    for (int k = 0; k < K; ++k) {
        // y_pow has 2k+1 coefficients centered at index k
        const std::size_t shift = static_cast<std::size_t>((K - 1) - k);
        for (std::size_t i = 0; i < y_pow.size(); ++i) acc[shift + i] += hb[static_cast<std::size_t>(k)] * y_pow[i];
        y_pow = detail::convolve(y_pow, y_poly);
    }
    pk = acc;
    Mask hd;
    hd.taps = detail::convolve(detail::binomial_mask(p_dual), pk);
    hd.offset = -(p_dual / 2) - (K - 1);
    for (auto& t : hd.taps) t *= r2;

    // Align the dual so that sum_k h_k hd_{k+2n} = delta_{0n}.
    double best = -1;
    index_t best_shift = 0;
    for (index_t s = -4; s <= 4; s += 2) {
        double c = 0;
        for (index_t k = h.first(); k <= h.last(); ++k) c += h[k] * hd[k - s];
        if (std::abs(c - 1.0) < std::abs(best - 1.0) || best < 0) {
            best = c;
            best_shift = s;
        }
    }
    hd.offset += best_shift;

    FilterBank bank;
    bank.family = Family::cdf;
    bank.p = p;
    bank.p_dual = p_dual;
    bank.h = h;
    bank.h_dual = hd;
    bank.g = detail::alternating_flip(bank.h_dual);
    bank.g_dual = detail::alternating_flip(bank.h);
    return bank;
}

/// Parses "db3", "cdf33", "cdf(3,5)", or a bare family ("db", "cdf") with the
/// orders supplied separately.
inline FilterBank make_filter(const std::string& family, int p = 0, int p_dual = 0)
{
    auto digits = [](const std::string& s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    if (family == "db" || family == "daubechies") {
        if (p < 1) throw ConfigError("family db needs --p");
        return daubechies_filter(p);
    }
    if (family == "cdf") {
        if (p < 1 || p_dual < 1) throw ConfigError("family cdf needs --p and --pdual");
        return cdf_filter(p, p_dual);
    }
    if (family.rfind("db", 0) == 0 && digits(family.substr(2)))
        return daubechies_filter(std::stoi(family.substr(2)));
    if (family.rfind("cdf(", 0) == 0 && family.back() == ')') {
        auto body = family.substr(4, family.size() - 5);
        auto comma = body.find(',');
        if (comma != std::string::npos && digits(body.substr(0, comma)) && digits(body.substr(comma + 1)))
            return cdf_filter(std::stoi(body.substr(0, comma)), std::stoi(body.substr(comma + 1)));
    }
    if (family.rfind("cdf", 0) == 0 && family.size() == 5 && digits(family.substr(3)))
        return cdf_filter(family[3] - '0', family[4] - '0');
    throw ConfigError("unknown wavelet family '" + family + "' (expected dbP, cdfPQ or cdf(P,Q))");
}

struct ValidationReport {
    struct Check {
        std::string name;
        bool pass = true;
        double violation = 0;
    };
    std::vector<Check> checks;

    bool all_pass() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }
    const Check* find(const std::string& name) const
    {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/// Max |sum_k a_k b_{k+2n} - delta_{0n}| over all n with overlap.
inline double double_shift_violation(const Mask& a, const Mask& b)
{
    double worst = 0;
    const index_t nmin = floor_div(a.first() - b.last(), 2) - 1;
    const index_t nmax = ceil_div(a.last() - b.first(), 2) + 1;
    for (index_t n = nmin; n <= nmax; ++n) {
        double s = 0;
        for (index_t k = a.first(); k <= a.last(); ++k) s += a[k] * b[k + 2 * n];
        worst = std::max(worst, std::abs(s - (n == 0 ? 1.0 : 0.0)));
    }
    return worst;
}

/// Relative size of the discrete moments sum_k m_k k^j for j < count.
inline double moment_violation(const Mask& m, int count)
{
    double worst = 0;
    for (int j = 0; j < count; ++j) {
        double s = 0, scale = 0;
        for (index_t k = m.first(); k <= m.last(); ++k) {
            double term = m[k] * std::pow(static_cast<double>(k), j);
            s += term;
            scale += std::abs(term);
        }
        worst = std::max(worst, std::abs(s) / std::max(scale, 1e-300));
    }
    return worst;
}

inline ValidationReport validate(const FilterBank& bank, double tol)
{
    ValidationReport rep;
    auto add = [&](std::string name, double v, double t) {
        rep.checks.push_back({std::move(name), v <= t, v});
    };
    add("double_shift", double_shift_violation(bank.h, bank.h_dual), tol);
    add("sum_h", std::abs(bank.h.sum() - std::numbers::sqrt2), tol);
    add("sum_h_dual", std::abs(bank.h_dual.sum() - std::numbers::sqrt2), tol);

    auto flip_dev = [](const Mask& got, const Mask& expect) {
        if (got.offset != expect.offset || got.taps.size() != expect.taps.size())
            return std::numeric_limits<double>::infinity();
        double d = 0;
        for (std::size_t i = 0; i < got.taps.size(); ++i) d = std::max(d, std::abs(got.taps[i] - expect.taps[i]));
        return d;
    };
    add("flip_g", flip_dev(bank.g, detail::alternating_flip(bank.h_dual)), 0.0);
    add("flip_g_dual", flip_dev(bank.g_dual, detail::alternating_flip(bank.h)), 0.0);

    // Vanishing moments: g annihilates polynomials of degree < p_dual,
    // g_dual those of degree < p. Relative measure; never tighter than 1e-10.
    const double mtol = std::max(tol, 1e-10);
    add("moments_g", moment_violation(bank.g, bank.p_dual), mtol);
    add("moments_g_dual", moment_violation(bank.g_dual, bank.p), mtol);
    if (bank.family == Family::daubechies)
        add("orthogonal", flip_dev(bank.h, bank.h_dual), 0.0);
    return rep;
}

} // namespace wavext
