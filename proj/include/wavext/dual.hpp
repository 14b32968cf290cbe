#pragma once

// Discrete duals of the sampled primal scaling function.
//
// b_m = phi(m / q) is biorthogonal to b~ under the oversampled pairing when
//     sum_m b_m b~_{m - k q} = delta_{0k}   for all k.
// Duals are found by solving this finite system on a candidate support.

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "cascade.hpp"
#include "common.hpp"
#include "filters.hpp"

namespace wavext {

struct SampledScaling {
    int q = 2;
    index_t first = 0;          ///< index of b[0] in the sample grid m
    std::vector<double> b;      ///< q * (support length) samples, right endpoint excluded

    index_t size() const { return static_cast<index_t>(b.size()); }
    index_t last() const { return first + size() - 1; }
    double at(index_t m) const
    {
        if (m < first || m > last()) return 0.0;
        return b[static_cast<std::size_t>(m - first)];
    }
};

struct DiscreteDual {
    int q = 2;
    index_t first = 0;          ///< support offset
    std::vector<double> values;
    double norm = 0;

    index_t size() const { return static_cast<index_t>(values.size()); }
    index_t last() const { return first + size() - 1; }
    double at(index_t m) const
    {
        if (m < first || m > last()) return 0.0;
        return values[static_cast<std::size_t>(m - first)];
    }
};

/// Centered cardinal B-spline of order p with support [offset, offset + p],
/// left-closed at the endpoints.
inline double bspline(int p, index_t offset, double t)
{
    const double x = t - static_cast<double>(offset);
    if (x < 0 || x >= p) return 0.0;
    if (p == 1) return 1.0;
    double s = 0, fact = 1;
    for (int i = 2; i < p; ++i) fact *= i;
    for (int k = 0; k <= p; ++k) {
        const double d = x - k;
        if (d <= 0) break;
        s += ((k % 2) ? -1.0 : 1.0) * detail::binomial(p, k) * std::pow(d, p - 1);
    }
    return s / fact;
}

inline SampledScaling sample_primal(const FilterBank& bank, int q)
{
    if (q < 2) throw ConfigError("oversampling factor q must be >= 2");
    SampledScaling s;
    s.q = q;
    s.first = bank.h.first() * q;
    const index_t count = (bank.h.size() - 1) * q;
    s.b.resize(static_cast<std::size_t>(count));
    if (is_pow2(q)) {
        const DyadicSamples phi = scaling_at_level(bank.h, log2_exact(q));
        for (index_t i = 0; i < count; ++i) s.b[static_cast<std::size_t>(i)] = phi.at(s.first + i);
    } else {
        if (bank.family == Family::daubechies)
            throw ConfigError("Daubechies scaling functions are only available at dyadic points; q must be a power of two");
        for (index_t i = 0; i < count; ++i)
            s.b[static_cast<std::size_t>(i)] = bspline(bank.p, bank.h.first(), static_cast<double>(s.first + i) / q);
    }
    return s;
}

namespace detail {

struct DualSystem {
    Eigen::MatrixXd C;
    Eigen::VectorXd rhs;
};

/// Rows: shifts k with overlap; columns: unknowns b~_j for j in [s, s + n).
inline DualSystem dual_system(const SampledScaling& b, index_t s, index_t n)
{
    const int q = b.q;
    const index_t kmin = ceil_div(b.first - s - n + 1, q);
    const index_t kmax = floor_div(b.last() - s, q);
    DualSystem sys;
    const index_t rows = std::max<index_t>(kmax - kmin + 1, 0);
    sys.C = Eigen::MatrixXd::Zero(rows, n);
    sys.rhs = Eigen::VectorXd::Zero(rows);
    for (index_t k = kmin; k <= kmax; ++k) {
        for (index_t j = 0; j < n; ++j) sys.C(k - kmin, j) = b.at(s + j + k * q);
        if (k == 0) sys.rhs(k - kmin) = 1.0;
    }
    return sys;
}

struct DualSolve {
    Eigen::VectorXd x;
    double residual = 0;
    bool ok = false;
};

inline DualSolve solve_dual_system(const DualSystem& sys, bool prefer_square)
{
    DualSolve out;
    if (sys.C.rows() == 0 || sys.rhs.sum() == 0.0) return out;
    bool solved = false;
    if (prefer_square && sys.C.rows() == sys.C.cols()) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.C);
        if (lu.isInvertible()) {
            out.x = lu.solve(sys.rhs);
            solved = true;
        }
    }
    if (!solved) out.x = sys.C.completeOrthogonalDecomposition().solve(sys.rhs);
    out.residual = (sys.C * out.x - sys.rhs).norm();
    out.ok = out.residual < 1e-12 && out.x.allFinite();
    return out;
}

inline DiscreteDual make_dual(int q, index_t s, const Eigen::VectorXd& x)
{
    DiscreteDual d;
    d.q = q;
    d.first = s;
    d.values.assign(x.data(), x.data() + x.size());
    const double mx = x.cwiseAbs().maxCoeff();
    while (d.values.size() > 1 && std::abs(d.values.back()) <= 1e-14 * mx) d.values.pop_back();
    while (d.values.size() > 1 && std::abs(d.values.front()) <= 1e-14 * mx) {
        d.values.erase(d.values.begin());
        ++d.first;
    }
    double n2 = 0;
    for (double v : d.values) n2 += v * v;
    d.norm = std::sqrt(n2);
    return d;
}

struct SupportChoice {
    index_t start = 0, length = 0;
    DualSolve solve;
};

/// Smallest feasible support: lengths q, 2q, ... centered on the primal
/// samples, up to 8x the primal support.
inline SupportChoice minimal_support(const SampledScaling& b)
{
    const int q = b.q;
    index_t nz0 = b.first, nz1 = b.last();
    while (nz0 < nz1 && b.at(nz0) == 0.0) ++nz0;
    while (nz1 > nz0 && b.at(nz1) == 0.0) --nz1;
    const double center = 0.5 * static_cast<double>(nz0 + nz1);
    const index_t cap = 8 * b.size();
    for (index_t n = q; n <= cap; n += q) {
        const index_t s0 = static_cast<index_t>(std::llround(center - 0.5 * static_cast<double>(n - 1)));
        SupportChoice best;
        bool found = false;
        for (index_t ds = 0; ds <= q; ++ds)
            for (int sign : {1, -1}) {
                if (ds == 0 && sign < 0) continue;
                const index_t s = s0 + sign * ds;
                auto sol = solve_dual_system(dual_system(b, s, n), true);
                if (!sol.ok) continue;
                if (!found || sol.x.norm() < best.solve.x.norm() - 1e-12) {
                    best = {s, n, sol};
                    found = true;
                }
            }
        if (found) return best;
    }
    throw Error("no compact discrete dual found up to support " + std::to_string(cap) +
                "; try least_norm_dual with an explicit support");
}

} // namespace detail

/// Dual with the smallest support; square systems are solved exactly,
/// otherwise the minimum-norm solution on that support is returned.
inline DiscreteDual minimal_dual(const SampledScaling& b)
{
    auto choice = detail::minimal_support(b);
    return detail::make_dual(b.q, choice.start, choice.solve.x);
}

/// Minimum-l2-norm dual on a support of the given length. Supports of
/// increasing length are nested, so the norm is non-increasing.
inline DiscreteDual least_norm_dual(const SampledScaling& b, index_t support_len)
{
    auto choice = detail::minimal_support(b);
    if (support_len < choice.length)
        throw Error("support length " + std::to_string(support_len) + " below the minimal feasible support " +
                    std::to_string(choice.length));
    const index_t s = choice.start - (support_len - choice.length) / 2;
    auto sol = detail::solve_dual_system(detail::dual_system(b, s, support_len), false);
    if (!sol.ok) throw Error("dual system infeasible on the requested support");
    return detail::make_dual(b.q, s, sol.x);
}

/// max_k |sum_m b_m b~_{m-kq} - delta_{0k}|
inline double dual_residual(const SampledScaling& b, const DiscreteDual& d)
{
    const int q = b.q;
    double worst = 0;
    const index_t kmin = floor_div(b.first - d.last(), q) - 1;
    const index_t kmax = ceil_div(b.last() - d.first, q) + 1;
    for (index_t k = kmin; k <= kmax; ++k) {
        double s = 0;
        for (index_t m = b.first; m <= b.last(); ++m) s += b.at(m) * d.at(m - k * q);
        worst = std::max(worst, std::abs(s - (k == 0 ? 1.0 : 0.0)));
    }
    return worst;
}

/// Grid samples (length N q) of the k = 0 periodized discrete dual,
///     N^{-1/2} sum_l b~_{m - N q l}.
/// Row k is this sequence circularly shifted by k q.
inline std::vector<double> periodize_dual(const DiscreteDual& d, index_t N, int q)
{
    const index_t len = N * q;
    if (d.size() >= len)
        throw Error("dual support " + std::to_string(d.size()) + " must be smaller than N q = " + std::to_string(len));
    std::vector<double> out(static_cast<std::size_t>(len), 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    for (index_t m = d.first; m <= d.last(); ++m) out[static_cast<std::size_t>(pmod(m, len))] += scale * d.at(m);
    return out;
}

/// Grid samples of the periodized primal phi_{0N}: sqrt(N) sum_l b_{m - N q l}.
inline std::vector<double> periodize_primal(const SampledScaling& b, index_t N)
{
    const index_t len = N * b.q;
    if (b.size() >= len) throw Error("primal support must be smaller than N q");
    std::vector<double> out(static_cast<std::size_t>(len), 0.0);
    const double scale = std::sqrt(static_cast<double>(N));
    for (index_t m = b.first; m <= b.last(); ++m) out[static_cast<std::size_t>(pmod(m, len))] += scale * b.at(m);
    return out;
}

/// Process-wide cache of minimal duals keyed by (family, q).
inline const DiscreteDual& cached_minimal_dual(const FilterBank& bank, int q)
{
    static std::mutex mu;
    static std::map<std::pair<std::string, int>, DiscreteDual> cache;
    std::lock_guard lock(mu);
    auto key = std::make_pair(bank.name(), q);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, minimal_dual(sample_primal(bank, q))).first;
    return it->second;
}

} // namespace wavext
