#pragma once

// Periodic fast wavelet transforms.
//
// Coefficient layout for N = 2^J:
//     [v_00, w_00, w_10, w_11, ..., w_{J-1,0} ... w_{J-1,2^{J-1}-1}]
// i.e. one scaling coefficient followed by wavelet blocks of sizes 1, 2, 4, ...
//
// Which masks are used where:
//     W        (primal forward)  analysis with (h_dual, g_dual)
//     W^{-1}   (primal inverse)  synthesis with (h, g)
//     W~       (dual forward)    analysis with (h, g)
//     W~^{-1}  (dual inverse)    synthesis with (h_dual, g_dual)
// so that W^T = W~^{-1} and (W^{-1})^T = W~.

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "common.hpp"
#include "filters.hpp"

namespace wavext {

enum class Direction { forward, inverse };
enum class Side { primal, dual };

namespace detail {

/// One analysis step on x[0, n): x <- [lo (n/2), hi (n/2)].
inline void analysis_step(double* x, index_t n, const Mask& lo, const Mask& hi, std::vector<double>& work)
{
    const index_t half = n / 2;
    work.resize(static_cast<std::size_t>(n));
    double* out = work.data();
    auto run = [&](const Mask& m, double* dst) {
        const index_t off = m.offset;
        const index_t len = m.size();
        const double* taps = m.taps.data();
        for (index_t k = 0; k < half; ++k) {
            const index_t base = 2 * k + off;
            double acc = 0;
            if (base >= 0 && base + len <= n) {
                const double* src = x + base;
                for (index_t t = 0; t < len; ++t) acc += taps[t] * src[t];
            } else {
                for (index_t t = 0; t < len; ++t) acc += taps[t] * x[pmod(base + t, n)];
            }
            dst[k] = acc;
        }
    };
    run(lo, out);
    run(hi, out + half);
    std::copy(out, out + n, x);
}

/// One synthesis step: x[0, n) = [lo, hi] -> reconstructed level of length n.
inline void synthesis_step(double* x, index_t n, const Mask& lo, const Mask& hi, std::vector<double>& work)
{
    const index_t half = n / 2;
    work.assign(static_cast<std::size_t>(n), 0.0);
    double* out = work.data();
    auto run = [&](const Mask& m, const double* src) {
        const index_t off = m.offset;
        const index_t len = m.size();
        const double* taps = m.taps.data();
        for (index_t l = 0; l < half; ++l) {
            const double c = src[l];
            if (c == 0.0) continue;
            const index_t base = 2 * l + off;
            if (base >= 0 && base + len <= n) {
                double* dst = out + base;
                for (index_t t = 0; t < len; ++t) dst[t] += taps[t] * c;
            } else {
                for (index_t t = 0; t < len; ++t) out[pmod(base + t, n)] += taps[t] * c;
            }
        }
    };
    run(lo, x);
    run(hi, x + half);
    std::copy(out, out + n, x);
}

} // namespace detail

/// A 1-D periodic transform of length 2^J in one direction on one side.
class TransformPlan {
public:
    TransformPlan(const FilterBank& bank, int J, Direction dir, Side side)
        : J_(J), dir_(dir), side_(side)
    {
        if (J < 1) throw Error("transform needs J >= 1");
        const bool primal_fwd = (dir == Direction::forward) == (side == Side::primal);
        // primal forward and dual inverse use the dual masks
        if (primal_fwd) {
            lo_ = bank.h_dual;
            hi_ = bank.g_dual;
        } else {
            lo_ = bank.h;
            hi_ = bank.g;
        }
    }

    int levels() const { return J_; }
    index_t size() const { return index_t{1} << J_; }
    Direction direction() const { return dir_; }
    Side side() const { return side_; }

    void apply(std::span<double> v, std::vector<double>& work) const
    {
        if (static_cast<index_t>(v.size()) != size())
            throw Error("transform length " + std::to_string(v.size()) + " != 2^" + std::to_string(J_));
        if (dir_ == Direction::forward) {
            for (index_t n = size(); n >= 2; n /= 2) detail::analysis_step(v.data(), n, lo_, hi_, work);
        } else {
            for (index_t n = 2; n <= size(); n *= 2) detail::synthesis_step(v.data(), n, lo_, hi_, work);
        }
    }

    void apply(std::span<double> v) const
    {
        std::vector<double> work;
        apply(v, work);
    }

    /// Explicit matrix, assembled by transforming unit vectors.
    Eigen::MatrixXd dense() const
    {
        if (J_ > 12) throw Error("dense transform matrix limited to J <= 12");
        const index_t n = size();
        Eigen::MatrixXd M(n, n);
        std::vector<double> col(static_cast<std::size_t>(n)), work;
        for (index_t k = 0; k < n; ++k) {
            std::fill(col.begin(), col.end(), 0.0);
            col[static_cast<std::size_t>(k)] = 1.0;
            apply(col, work);
            for (index_t i = 0; i < n; ++i) M(i, k) = col[static_cast<std::size_t>(i)];
        }
        return M;
    }

    const Mask& low() const { return lo_; }
    const Mask& high() const { return hi_; }

private:
    int J_;
    Direction dir_;
    Side side_;
    Mask lo_, hi_;
};

namespace detail {
inline std::vector<double> run_plan(std::vector<double> v, const FilterBank& bank, Direction d, Side s)
{
    TransformPlan(bank, log2_exact(static_cast<index_t>(v.size())), d, s).apply(v);
    return v;
}
} // namespace detail

inline std::vector<double> dwt(std::vector<double> v, const FilterBank& bank)
{
    return detail::run_plan(std::move(v), bank, Direction::forward, Side::primal);
}
inline std::vector<double> idwt(std::vector<double> w, const FilterBank& bank)
{
    return detail::run_plan(std::move(w), bank, Direction::inverse, Side::primal);
}
inline std::vector<double> dual_dwt(std::vector<double> v, const FilterBank& bank)
{
    return detail::run_plan(std::move(v), bank, Direction::forward, Side::dual);
}
inline std::vector<double> dual_idwt(std::vector<double> w, const FilterBank& bank)
{
    return detail::run_plan(std::move(w), bank, Direction::inverse, Side::dual);
}

/// 0 for v_00, j + 1 for w_{j,.}; the finest band of a length-2^J vector is J.
inline int coefficient_band(index_t k) { return k == 0 ? 0 : 1 + static_cast<int>(std::floor(std::log2(static_cast<double>(k)) + 1e-12)); }

// --- column filters of W^{-1} --------------------------------------------------

/// The J+1 distinct columns of W_J^{-1}: index 0 is the column of v_00,
/// index 1 + j the column of w_{j,0}. Every other column is a circular shift
/// of one of them by a multiple of stride(i).
struct ColumnFilters {
    int J = 0;
    std::vector<std::vector<double>> filters;
    /// Unwrapped support [first, last] before periodization.
    std::vector<std::pair<index_t, index_t>> support;

    index_t size() const { return index_t{1} << J; }
    index_t stride(std::size_t i) const { return i == 0 ? size() : (index_t{1} << (J - static_cast<int>(i) + 1)); }
    index_t count(std::size_t i) const { return i == 0 ? 1 : (index_t{1} << (static_cast<int>(i) - 1)); }
    index_t block_start(std::size_t i) const { return i == 0 ? 0 : count(i); }

    /// Nonzero pattern of row r of W^{-1}: columns with their values.
    template <class F>
    void for_each_in_row(index_t r, F&& f) const
    {
        const index_t N = size();
        for (std::size_t i = 0; i < filters.size(); ++i) {
            const index_t S = stride(i), C = count(i);
            const auto [a, b] = support[i];
            index_t lo = ceil_div(r - b, S), hi = floor_div(r - a, S);
            if (hi - lo + 1 >= C) {
                lo = 0;
                hi = C - 1;
            }
            for (index_t l = lo; l <= hi; ++l) {
                const index_t lm = pmod(l, C);
                const double v = filters[i][static_cast<std::size_t>(pmod(r - lm * S, N))];
                f(block_start(i) + lm, v);
            }
        }
    }
};

namespace detail {
/// Periodized upsample-and-convolve with the low-pass mask: one synthesis
/// step with zero details.
inline std::vector<double> cascade_low(const std::vector<double>& x, const Mask& h)
{
    const index_t half = static_cast<index_t>(x.size());
    const index_t n = 2 * half;
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (index_t l = 0; l < half; ++l) {
        const double c = x[static_cast<std::size_t>(l)];
        if (c == 0.0) continue;
        for (index_t t = h.first(); t <= h.last(); ++t) out[static_cast<std::size_t>(pmod(2 * l + t, n))] += h[t] * c;
    }
    return out;
}
} // namespace detail

inline ColumnFilters idwt_column_filters(const FilterBank& bank, int J)
{
    if (J < 1) throw Error("column filters need J >= 1");
    ColumnFilters cf;
    cf.J = J;
    // v_00: start from the single coarse coefficient.
    {
        std::vector<double> x{1.0};
        std::pair<index_t, index_t> s{0, 0};
        for (int lev = 0; lev < J; ++lev) {
            x = detail::cascade_low(x, bank.h);
            s = {2 * s.first + bank.h.first(), 2 * s.second + bank.h.last()};
        }
        cf.filters.push_back(std::move(x));
        cf.support.push_back(s);
    }
    for (int j = 0; j < J; ++j) {
        const index_t n = index_t{1} << (j + 1);
        std::vector<double> x(static_cast<std::size_t>(n), 0.0);
        for (index_t t = bank.g.first(); t <= bank.g.last(); ++t) x[static_cast<std::size_t>(pmod(t, n))] += bank.g[t];
        std::pair<index_t, index_t> s{bank.g.first(), bank.g.last()};
        for (int lev = j + 1; lev < J; ++lev) {
            x = detail::cascade_low(x, bank.h);
            s = {2 * s.first + bank.h.first(), 2 * s.second + bank.h.last()};
        }
        cf.filters.push_back(std::move(x));
        cf.support.push_back(s);
    }
    return cf;
}

/// Selected rows of W^{-1} as a sparse matrix (#rows x N), built from the
/// column filters without forming the dense transform.
inline Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_idwt_rows(std::span<const index_t> rows, const ColumnFilters& cf)
{
    std::vector<Eigen::Triplet<double, index_t>> trip;
    for (std::size_t i = 0; i < rows.size(); ++i)
        cf.for_each_in_row(rows[i], [&](index_t col, double v) {
            if (v != 0.0) trip.emplace_back(static_cast<index_t>(i), col, v);
        });
    Eigen::SparseMatrix<double, Eigen::RowMajor> S(static_cast<index_t>(rows.size()), cf.size());
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
}

inline Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_idwt_rows(std::span<const index_t> rows, const FilterBank& bank, int J)
{
    return sparse_idwt_rows(rows, idwt_column_filters(bank, J));
}

// --- tensor-product transforms -------------------------------------------------

/// Row-major multi-index shape; the last axis varies fastest.
struct Shape {
    std::vector<index_t> dims;

    std::size_t rank() const { return dims.size(); }
    index_t total() const
    {
        index_t t = 1;
        for (auto d : dims) t *= d;
        return t;
    }
    index_t stride(std::size_t axis) const
    {
        index_t s = 1;
        for (std::size_t a = axis + 1; a < dims.size(); ++a) s *= dims[a];
        return s;
    }
    std::vector<index_t> unravel(index_t lin) const
    {
        std::vector<index_t> idx(dims.size());
        for (std::size_t a = dims.size(); a-- > 0;) {
            idx[a] = lin % dims[a];
            lin /= dims[a];
        }
        return idx;
    }
    index_t ravel(std::span<const index_t> idx) const
    {
        index_t lin = 0;
        for (std::size_t a = 0; a < dims.size(); ++a) lin = lin * dims[a] + idx[a];
        return lin;
    }
};

/// Applies `fn(line)` to every 1-D line of `data` along `axis`.
template <class T, class F>
void for_each_line(std::span<T> data, const Shape& shape, std::size_t axis, std::vector<T>& line, F&& fn)
{
    const index_t n = shape.dims[axis];
    const index_t s = shape.stride(axis);
    const index_t outer = shape.total() / (n * s);
    line.resize(static_cast<std::size_t>(n));
    for (index_t o = 0; o < outer; ++o)
        for (index_t in = 0; in < s; ++in) {
            T* base = data.data() + o * n * s + in;
            if (s == 1) {
                fn(std::span<T>(base, static_cast<std::size_t>(n)));
                continue;
            }
            for (index_t i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = base[i * s];
            fn(std::span<T>(line));
            for (index_t i = 0; i < n; ++i) base[i * s] = line[static_cast<std::size_t>(i)];
        }
}

/// Tensor-product transform: one 1-D plan per axis, applied axis by axis.
class TensorTransform {
public:
    TensorTransform(const FilterBank& bank, std::span<const int> levels, Direction dir, Side side)
    {
        for (int J : levels) {
            plans_.emplace_back(bank, J, dir, side);
            shape_.dims.push_back(index_t{1} << J);
        }
    }

    const Shape& shape() const { return shape_; }

    void apply(std::span<double> v, std::vector<double>& line, std::vector<double>& work) const
    {
        if (static_cast<index_t>(v.size()) != shape_.total()) throw Error("tensor transform size mismatch");
        for (std::size_t a = 0; a < plans_.size(); ++a)
            for_each_line<double>(v, shape_, a, line, [&](std::span<double> l) { plans_[a].apply(l, work); });
    }

    void apply(std::span<double> v) const
    {
        std::vector<double> line, work;
        apply(v, line, work);
    }

private:
    std::vector<TransformPlan> plans_;
    Shape shape_;
};

// --- nonzero-pattern propagation ---------------------------------------------

namespace detail {
inline void pattern_analysis_step(char* x, index_t n, const Mask& lo, const Mask& hi, std::vector<char>& work)
{
    const index_t half = n / 2;
    work.assign(static_cast<std::size_t>(n), 0);
    auto run = [&](const Mask& m, char* dst) {
        for (index_t k = 0; k < half; ++k) {
            char acc = 0;
            for (index_t t = m.first(); t <= m.last() && !acc; ++t)
                if (m[t] != 0.0 && x[pmod(2 * k + t, n)]) acc = 1;
            dst[k] = acc;
        }
    };
    run(lo, work.data());
    run(hi, work.data() + half);
    std::copy(work.begin(), work.end(), x);
}
} // namespace detail

/// Propagates a poison flag through the tensor dual DWT W~ = (W^{-1})^T:
/// on return, flags mark the coefficients whose W^{-1} column touches a
/// flagged scaling index.
inline void propagate_pattern_dual_dwt(std::span<char> flags, const FilterBank& bank, std::span<const int> levels)
{
    Shape shape;
    for (int J : levels) shape.dims.push_back(index_t{1} << J);
    if (static_cast<index_t>(flags.size()) != shape.total()) throw Error("pattern size mismatch");
    std::vector<char> line, work;
    for (std::size_t a = 0; a < shape.rank(); ++a)
        for_each_line<char>(flags, shape, a, line, [&](std::span<char> l) {
            for (index_t n = static_cast<index_t>(l.size()); n >= 2; n /= 2)
                detail::pattern_analysis_step(l.data(), n, bank.h, bank.g, work);
        });
}

} // namespace wavext
