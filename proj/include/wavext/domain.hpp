#pragma once

// Domains Omega inside the unit box, the masked oversampled grid, and the
// boundary index sets.
//
// Grid: per dimension i the points t = m / (N_i q_i), m = 0 .. N_i q_i - 1,
// flattened row-major (last axis fastest). Only points with indicator true
// become rows of the collocation system.
//
// Index sets (all discrete):
//   K      scaling indices whose closed grid support box holds points both in
//          and outside Omega
//   L      tensor wavelet coefficients whose W^{-1} column touches K
//   Mrows  grid rows that can carry a nonzero of the plunge matrix

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "dual.hpp"
#include "dwt.hpp"
#include "expression.hpp"
#include "filters.hpp"

namespace wavext {

struct DomainMask {
    int dim = 1;
    std::function<bool(std::span<const double>)> indicator;
    std::string spec;

    bool contains(std::span<const double> t) const { return indicator(t); }
};

inline DomainMask interval_domain(double a, double b)
{
    if (!(a <= b)) throw ConfigError("interval needs a <= b");
    return {1, [a, b](std::span<const double> t) { return t[0] >= a && t[0] <= b; },
            "interval:" + std::to_string(a) + "," + std::to_string(b)};
}

inline DomainMask box_domain(std::vector<double> lo, std::vector<double> hi)
{
    if (lo.size() != hi.size() || lo.empty()) throw ConfigError("box needs matching lower/upper corners");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] <= hi[i])) throw ConfigError("box needs lo <= hi in every dimension");
    std::ostringstream os;
    os << "box:";
    for (std::size_t i = 0; i < lo.size(); ++i) os << (i ? "," : "") << lo[i] << "," << hi[i];
    const int d = static_cast<int>(lo.size());
    return {d,
            [lo, hi](std::span<const double> t) {
                for (std::size_t i = 0; i < lo.size(); ++i)
                    if (t[i] < lo[i] || t[i] > hi[i]) return false;
                return true;
            },
            os.str()};
}

/// Closed Euclidean ball; a disk for two coordinates.
inline DomainMask ball_domain(std::vector<double> center, double r)
{
    if (center.empty() || !(r > 0)) throw ConfigError("ball needs a center and a positive radius");
    std::ostringstream os;
    os << (center.size() == 2 ? "disk:" : "ball:");
    for (double c : center) os << c << ",";
    os << r;
    const int d = static_cast<int>(center.size());
    return {d,
            [center, r](std::span<const double> t) {
                double s = 0;
                for (std::size_t i = 0; i < center.size(); ++i) s += (t[i] - center[i]) * (t[i] - center[i]);
                return s <= r * r;
            },
            os.str()};
}

inline DomainMask full_domain(int d)
{
    if (d < 1) throw ConfigError("dimension must be >= 1");
    return {d, [](std::span<const double>) { return true; }, "full:" + std::to_string(d)};
}

inline DomainMask predicate_domain(int d, std::function<bool(std::span<const double>)> f, std::string name)
{
    return {d, std::move(f), std::move(name)};
}

namespace detail {
inline std::vector<double> parse_numbers(const std::string& s)
{
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + item + "' in domain spec");
        }
    }
    return v;
}
} // namespace detail

/// interval:a,b | disk:cx,cy,r | ball:cx,cy,cz,r | box:a0,b0,a1,b1,... |
/// full:d | expr:d:<predicate over x,y,z>
inline DomainMask parse_domain(const std::string& spec)
{
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ConfigError("domain spec '" + spec + "' needs the form kind:args");
    const std::string kind = spec.substr(0, colon), rest = spec.substr(colon + 1);
    if (kind == "expr") {
        const auto c2 = rest.find(':');
        if (c2 == std::string::npos) throw ConfigError("expr domain needs expr:d:<predicate>");
        const auto dv = detail::parse_numbers(rest.substr(0, c2));
        if (dv.size() != 1 || dv[0] < 1 || dv[0] > 3) throw ConfigError("expr domain dimension must be 1, 2 or 3");
        auto e = Expression::parse(rest.substr(c2 + 1));
        const int d = static_cast<int>(dv[0]);
        if (e.arity() > d) throw ConfigError("predicate uses more variables than the domain dimension");
        return predicate_domain(d, [e](std::span<const double> t) { return e(t) != 0.0; }, spec);
    }
    const auto v = detail::parse_numbers(rest);
    if (kind == "interval") {
        if (v.size() != 2) throw ConfigError("interval needs two numbers");
        return interval_domain(v[0], v[1]);
    }
    if (kind == "disk") {
        if (v.size() != 3) throw ConfigError("disk needs cx,cy,r");
        return ball_domain({v[0], v[1]}, v[2]);
    }
    if (kind == "ball") {
        if (v.size() < 2) throw ConfigError("ball needs a center and a radius");
        return ball_domain(std::vector<double>(v.begin(), v.end() - 1), v.back());
    }
    if (kind == "box") {
        if (v.empty() || v.size() % 2) throw ConfigError("box needs pairs lo,hi per dimension");
        std::vector<double> lo, hi;
        for (std::size_t i = 0; i < v.size(); i += 2) {
            lo.push_back(v[i]);
            hi.push_back(v[i + 1]);
        }
        return box_domain(lo, hi);
    }
    if (kind == "full") {
        if (v.size() != 1) throw ConfigError("full needs the dimension");
        return full_domain(static_cast<int>(v[0]));
    }
    throw ConfigError("unknown domain kind '" + kind + "' (expected interval, disk, ball, box, full, expr)");
}

// --- masked grid -----------------------------------------------------------

struct MaskedGrid {
    std::vector<index_t> N;
    std::vector<int> q;
    Shape full;                      ///< N_i q_i points per dimension
    std::vector<index_t> inside;     ///< sorted linear grid indices in Omega
    std::vector<index_t> row_of;     ///< linear grid index -> row, or -1
    bool touches_box = false;        ///< Omega reaches the boundary of the unit box

    int dim() const { return static_cast<int>(N.size()); }
    index_t M() const { return static_cast<index_t>(inside.size()); }
    index_t total_dofs() const
    {
        index_t t = 1;
        for (auto n : N) t *= n;
        return t;
    }
    std::vector<double> point_of_linear(index_t lin) const
    {
        const auto m = full.unravel(lin);
        std::vector<double> t(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) t[i] = static_cast<double>(m[i]) / static_cast<double>(full.dims[i]);
        return t;
    }
    std::vector<double> point(index_t row) const { return point_of_linear(inside[static_cast<std::size_t>(row)]); }
};

inline MaskedGrid masked_grid(const DomainMask& mask, std::vector<index_t> N, std::vector<int> q)
{
    if (N.size() != q.size() || N.empty()) throw ConfigError("N and q need one entry per dimension");
    if (static_cast<int>(N.size()) != mask.dim)
        throw ConfigError("domain has dimension " + std::to_string(mask.dim) + " but N has " + std::to_string(N.size()) + " entries");
    MaskedGrid g;
    for (std::size_t i = 0; i < N.size(); ++i) {
        if (!is_pow2(N[i]) || N[i] < 2) throw ConfigError("N must be a power of two >= 2 in every dimension");
        if (q[i] < 2) throw ConfigError("oversampling q must be >= 2");
        g.full.dims.push_back(N[i] * q[i]);
    }
    g.N = std::move(N);
    g.q = std::move(q);
    const index_t total = g.full.total();
    g.row_of.assign(static_cast<std::size_t>(total), -1);
    std::vector<double> t(g.N.size());
    std::vector<index_t> m(g.N.size(), 0);
    for (index_t lin = 0; lin < total; ++lin) {
        for (std::size_t i = 0; i < m.size(); ++i) t[i] = static_cast<double>(m[i]) / static_cast<double>(g.full.dims[i]);
        if (mask.contains(t)) {
            g.row_of[static_cast<std::size_t>(lin)] = static_cast<index_t>(g.inside.size());
            g.inside.push_back(lin);
            for (std::size_t i = 0; i < m.size(); ++i)
                if (m[i] == 0 || m[i] == g.full.dims[i] - 1) g.touches_box = true;
        }
        for (std::size_t i = m.size(); i-- > 0;) {
            if (++m[i] < g.full.dims[i]) break;
            m[i] = 0;
        }
    }
    if (g.M() <= g.total_dofs())
        throw ConfigError("only " + std::to_string(g.M()) + " grid points in the domain for " + std::to_string(g.total_dofs()) +
                          " degrees of freedom; increase q or N");
    return g;
}

// --- index sets ------------------------------------------------------------

struct IndexSets {
    std::vector<index_t> K;
    std::vector<index_t> L;
    std::vector<index_t> Mrows;
};

/// Closed grid support of the periodized phi_l along one axis:
/// m in [q (l + o), q (l + o + len)] with o = h.first(), len = support length.
struct SupportBox {
    index_t lo_offset;  ///< q o
    index_t width;      ///< q len + 1 points
};

inline SupportBox primal_box(const FilterBank& bank, int q)
{
    return {static_cast<index_t>(q) * bank.h.first(), static_cast<index_t>(q) * (bank.h.size() - 1) + 1};
}

namespace detail {

/// counts[s] = number of flagged points in the periodic box starting at s
/// with the given widths (window sums, one axis at a time).
inline std::vector<int> window_counts(const std::vector<index_t>& row_of, const Shape& shape, const std::vector<index_t>& width)
{
    std::vector<int> c(row_of.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = row_of[i] >= 0 ? 1 : 0;
    std::vector<int> line, tmp;
    for (std::size_t a = 0; a < shape.rank(); ++a) {
        const index_t w = width[a];
        for_each_line<int>(c, shape, a, line, [&](std::span<int> l) {
            const index_t n = static_cast<index_t>(l.size());
            tmp.assign(l.begin(), l.end());
            index_t acc = 0;
            for (index_t j = 0; j < w; ++j) acc += tmp[static_cast<std::size_t>(pmod(j, n))];
            for (index_t s = 0; s < n; ++s) {
                l[static_cast<std::size_t>(s)] = static_cast<int>(acc);
                acc += tmp[static_cast<std::size_t>(pmod(s + w, n))] - tmp[static_cast<std::size_t>(s)];
            }
        });
    }
    return c;
}

/// Scaling indices whose support box count satisfies pred(count, box size).
template <class Pred>
std::vector<index_t> scaling_select(const MaskedGrid& grid, const FilterBank& bank, Pred pred)
{
    std::vector<index_t> width;
    index_t boxsize = 1;
    std::vector<SupportBox> box;
    for (std::size_t i = 0; i < grid.N.size(); ++i) {
        box.push_back(primal_box(bank, grid.q[i]));
        width.push_back(box.back().width);
        boxsize *= box.back().width;
    }
    const auto counts = window_counts(grid.row_of, grid.full, width);
    Shape sshape{grid.N};
    std::vector<index_t> out, pos(grid.N.size());
    for (index_t l = 0; l < sshape.total(); ++l) {
        const auto li = sshape.unravel(l);
        for (std::size_t i = 0; i < li.size(); ++i)
            pos[i] = pmod(grid.q[i] * li[i] + box[i].lo_offset, grid.full.dims[i]);
        if (pred(counts[static_cast<std::size_t>(grid.full.ravel(pos))], boxsize)) out.push_back(l);
    }
    return out;
}

inline std::vector<index_t> flagged(const std::vector<char>& f)
{
    std::vector<index_t> out;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i]) out.push_back(static_cast<index_t>(i));
    return out;
}

} // namespace detail

inline std::vector<int> grid_levels(const MaskedGrid& grid)
{
    std::vector<int> J;
    for (auto n : grid.N) J.push_back(log2_exact(n));
    return J;
}

/// K: one pass over all scaling indices using box counts of grid points in Omega.
inline std::vector<index_t> scaling_boundary_set(const MaskedGrid& grid, const FilterBank& bank)
{
    return detail::scaling_select(grid, bank, [](index_t c, index_t size) { return c > 0 && c < size; });
}

/// Scaling indices whose support box meets Omega at all.
inline std::vector<index_t> scaling_touching_set(const MaskedGrid& grid, const FilterBank& bank)
{
    return detail::scaling_select(grid, bank, [](index_t c, index_t) { return c > 0; });
}

/// Propagate scaling indices to tensor wavelet coefficients with the
/// boolean dual DWT (poison-flag route).
inline std::vector<index_t> propagate_to_coefficients(const std::vector<index_t>& scaling, const FilterBank& bank,
                                                      const std::vector<int>& levels)
{
    index_t total = 1;
    for (int J : levels) total <<= J;
    std::vector<char> flags(static_cast<std::size_t>(total), 0);
    for (auto k : scaling) flags[static_cast<std::size_t>(k)] = 1;
    propagate_pattern_dual_dwt(flags, bank, levels);
    return detail::flagged(flags);
}

inline std::vector<index_t> wavelet_boundary_set(const std::vector<index_t>& K, const FilterBank& bank, const std::vector<int>& levels)
{
    if (K.empty()) return {};
    return propagate_to_coefficients(K, bank, levels);
}

/// Same set from support arithmetic: union over r in K of the nonzero
/// pattern of row r of the tensor W^{-1}.
inline std::vector<index_t> wavelet_boundary_set_by_support(const std::vector<index_t>& K, const FilterBank& bank,
                                                            const std::vector<int>& levels)
{
    Shape shape;
    std::vector<ColumnFilters> cf;
    for (int J : levels) {
        shape.dims.push_back(index_t{1} << J);
        cf.push_back(idwt_column_filters(bank, J));
    }
    std::vector<char> flags(static_cast<std::size_t>(shape.total()), 0);
    std::vector<std::vector<index_t>> cols(levels.size());
    std::vector<index_t> idx(levels.size());
    for (auto r : K) {
        const auto ri = shape.unravel(r);
        for (std::size_t a = 0; a < levels.size(); ++a) {
            cols[a].clear();
            cf[a].for_each_in_row(ri[a], [&](index_t c, double) { cols[a].push_back(c); });
        }
        // cartesian product
        std::vector<std::size_t> it(levels.size(), 0);
        bool done = std::any_of(cols.begin(), cols.end(), [](const auto& c) { return c.empty(); });
        while (!done) {
            for (std::size_t a = 0; a < levels.size(); ++a) idx[a] = cols[a][it[a]];
            flags[static_cast<std::size_t>(shape.ravel(idx))] = 1;
            std::size_t a = levels.size();
            while (a-- > 0) {
                if (++it[a] < cols[a].size()) break;
                it[a] = 0;
                if (a == 0) done = true;
            }
        }
    }
    return detail::flagged(flags);
}

/// Rows of the plunge matrix that can be nonzero: grid points in Omega
/// inside the primal support of some scaling index i whose dual overlaps the
/// primal support of some k in K (i in K included).
inline std::vector<index_t> plunge_row_set(const std::vector<index_t>& K, const FilterBank& bank, const MaskedGrid& grid,
                                           const std::vector<const DiscreteDual*>& duals)
{
    if (K.empty()) return {};
    const std::size_t d = grid.N.size();
    Shape sshape{grid.N};
    std::vector<index_t> ilo(d), ihi(d);
    std::vector<SupportBox> box(d);
    for (std::size_t a = 0; a < d; ++a) {
        box[a] = primal_box(bank, grid.q[a]);
        const index_t pa = box[a].lo_offset, pb = pa + box[a].width - 1;
        const index_t q = grid.q[a];
        ilo[a] = ceil_div(pa - duals[a]->last(), q);
        ihi[a] = floor_div(pb - duals[a]->first, q);
    }
    std::vector<char> in_i(static_cast<std::size_t>(sshape.total()), 0);
    std::vector<index_t> idx(d), off(d);
    for (auto k : K) {
        const auto ki = sshape.unravel(k);
        for (std::size_t a = 0; a < d; ++a) off[a] = ilo[a];
        for (;;) {
            for (std::size_t a = 0; a < d; ++a) idx[a] = pmod(ki[a] + off[a], grid.N[a]);
            in_i[static_cast<std::size_t>(sshape.ravel(idx))] = 1;
            std::size_t a = d;
            bool done = true;
            while (a-- > 0) {
                if (++off[a] <= ihi[a]) {
                    done = false;
                    break;
                }
                off[a] = ilo[a];
            }
            if (done) break;
        }
    }
    std::vector<char> row_flag(static_cast<std::size_t>(grid.M()), 0);
    for (index_t i = 0; i < sshape.total(); ++i) {
        if (!in_i[static_cast<std::size_t>(i)]) continue;
        const auto ii = sshape.unravel(i);
        std::fill(off.begin(), off.end(), 0);
        for (;;) {
            for (std::size_t a = 0; a < d; ++a)
                idx[a] = pmod(grid.q[a] * ii[a] + box[a].lo_offset + off[a], grid.full.dims[a]);
            const index_t row = grid.row_of[static_cast<std::size_t>(grid.full.ravel(idx))];
            if (row >= 0) row_flag[static_cast<std::size_t>(row)] = 1;
            std::size_t a = d;
            bool done = true;
            while (a-- > 0) {
                if (++off[a] < box[a].width) {
                    done = false;
                    break;
                }
                off[a] = 0;
            }
            if (done) break;
        }
    }
    return detail::flagged(row_flag);
}

inline IndexSets compute_index_sets(const MaskedGrid& grid, const FilterBank& bank)
{
    IndexSets s;
    s.K = scaling_boundary_set(grid, bank);
    s.L = wavelet_boundary_set(s.K, bank, grid_levels(grid));
    std::vector<const DiscreteDual*> duals;
    for (int q : grid.q) duals.push_back(&cached_minimal_dual(bank, q));
    s.Mrows = plunge_row_set(s.K, bank, grid, duals);
    return s;
}

} // namespace wavext
