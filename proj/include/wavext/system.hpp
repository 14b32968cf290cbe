#pragma once

// The discrete collocation system on the masked grid.
//
//   A_hat(m, l) = prod_i sqrt(N_i) b_{(m_i - q_i l_i) mod N_i q_i}
//   Z_hat(m, l) = prod_i N_i^{-1/2} b~_{(m_i - q_i l_i) mod N_i q_i}
//
// Wavelet-level operators (tensor transforms applied axis by axis):
//   A  x = A_hat W^{-1} x          A* y = W~ A_hat^T y
//   Z* y = W Z_hat^T y             Z  x = Z_hat W~^{-1} x
// With this Z, Z* A = W Z_hat^T A_hat W^{-1}, which is the identity when
// Omega is the whole box. For orthogonal families W~ = W.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "common.hpp"
#include "domain.hpp"
#include "dual.hpp"
#include "dwt.hpp"
#include "filters.hpp"

namespace wavext {

using SparseRM = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseCM = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// One basis family on the box: per-dimension levels J_i and oversampling q_i.
struct BasisSpec {
    FilterBank bank;
    std::vector<int> levels;
    std::vector<int> q;

    std::size_t dim() const { return levels.size(); }
    std::vector<index_t> sizes() const
    {
        std::vector<index_t> n;
        for (int J : levels) n.push_back(index_t{1} << J);
        return n;
    }
    index_t total() const
    {
        index_t t = 1;
        for (int J : levels) t <<= J;
        return t;
    }
};

inline BasisSpec make_basis(const FilterBank& bank, const std::vector<index_t>& N, const std::vector<int>& q)
{
    if (N.size() != q.size() || N.empty()) throw ConfigError("N and q need one entry per dimension");
    BasisSpec s{bank, {}, q};
    for (auto n : N) {
        if (!is_pow2(n) || n < 2) throw ConfigError("N must be a power of two >= 2, got " + std::to_string(n));
        s.levels.push_back(log2_exact(n));
    }
    return s;
}

struct ScalingMatrices {
    SparseRM A_hat;  ///< M x N
    SparseRM Z_hat;  ///< M x N
};

namespace detail {

/// For each grid coordinate m on one axis: the periodized functions that
/// are nonzero there, with their values.
struct AxisTable {
    std::vector<std::vector<std::pair<index_t, double>>> at;
};

inline AxisTable axis_table(const std::vector<double>& periodized, index_t N, int q)
{
    const index_t len = N * q;
    AxisTable t;
    t.at.resize(static_cast<std::size_t>(len));
    std::vector<index_t> nz;
    for (index_t j = 0; j < len; ++j)
        if (periodized[static_cast<std::size_t>(j)] != 0.0) nz.push_back(j);
    for (index_t l = 0; l < N; ++l)
        for (index_t j : nz) t.at[static_cast<std::size_t>(pmod(q * l + j, len))].emplace_back(l, periodized[static_cast<std::size_t>(j)]);
    return t;
}

inline SparseRM tensor_rows(const MaskedGrid& grid, const std::vector<AxisTable>& tables)
{
    const std::size_t d = grid.N.size();
    Shape sshape{grid.N};
    std::vector<Eigen::Triplet<double, index_t>> trip;
    std::vector<index_t> idx(d);
    std::vector<std::size_t> it(d);
    for (index_t row = 0; row < grid.M(); ++row) {
        const auto m = grid.full.unravel(grid.inside[static_cast<std::size_t>(row)]);
        std::vector<const std::vector<std::pair<index_t, double>>*> lists(d);
        bool empty = false;
        for (std::size_t a = 0; a < d; ++a) {
            lists[a] = &tables[a].at[static_cast<std::size_t>(m[a])];
            if (lists[a]->empty()) empty = true;
        }
        if (empty) continue;
        std::fill(it.begin(), it.end(), 0);
        for (;;) {
            double v = 1;
            for (std::size_t a = 0; a < d; ++a) {
                idx[a] = (*lists[a])[it[a]].first;
                v *= (*lists[a])[it[a]].second;
            }
            trip.emplace_back(row, sshape.ravel(idx), v);
            std::size_t a = d;
            bool done = true;
            while (a-- > 0) {
                if (++it[a] < lists[a]->size()) {
                    done = false;
                    break;
                }
                it[a] = 0;
            }
            if (done) break;
        }
    }
    SparseRM S(grid.M(), sshape.total());
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
}

} // namespace detail

inline ScalingMatrices assemble_scaling(const FilterBank& bank, const MaskedGrid& grid, const std::vector<const DiscreteDual*>& duals)
{
    if (duals.size() != grid.N.size()) throw Error("one discrete dual per dimension required");
    std::vector<detail::AxisTable> ta, tz;
    for (std::size_t a = 0; a < grid.N.size(); ++a) {
        if (duals[a]->q != grid.q[a]) throw Error("dual oversampling does not match the grid");
        const auto b = sample_primal(bank, grid.q[a]);
        ta.push_back(detail::axis_table(periodize_primal(b, grid.N[a]), grid.N[a], grid.q[a]));
        tz.push_back(detail::axis_table(periodize_dual(*duals[a], grid.N[a], grid.q[a]), grid.N[a], grid.q[a]));
    }
    return {detail::tensor_rows(grid, ta), detail::tensor_rows(grid, tz)};
}

/// Scratch buffers for operator application.
struct Workspace {
    Eigen::VectorXd coeff;
    std::vector<double> line, work;
};

/// A, A*, Z, Z* on one masked grid.
class FrameSystem {
public:
    FrameSystem(BasisSpec basis, MaskedGrid grid)
        : basis_(std::move(basis)), grid_(std::move(grid)),
          inv_primal_(basis_.bank, basis_.levels, Direction::inverse, Side::primal),
          fwd_primal_(basis_.bank, basis_.levels, Direction::forward, Side::primal),
          inv_dual_(basis_.bank, basis_.levels, Direction::inverse, Side::dual),
          fwd_dual_(basis_.bank, basis_.levels, Direction::forward, Side::dual)
    {
        if (grid_.N != basis_.sizes() || grid_.q != basis_.q) throw Error("grid and basis sizes disagree");
        for (int q : basis_.q) duals_.push_back(&cached_minimal_dual(basis_.bank, q));
        scaling_ = assemble_scaling(basis_.bank, grid_, duals_);
    }

    static FrameSystem build(const BasisSpec& basis, const DomainMask& mask)
    {
        return FrameSystem(basis, masked_grid(mask, basis.sizes(), basis.q));
    }

    index_t rows() const { return grid_.M(); }
    index_t cols() const { return basis_.total(); }
    const BasisSpec& basis() const { return basis_; }
    const FilterBank& bank() const { return basis_.bank; }
    const MaskedGrid& grid() const { return grid_; }
    const ScalingMatrices& scaling() const { return scaling_; }
    const std::vector<const DiscreteDual*>& duals() const { return duals_; }

    void A(const Eigen::VectorXd& x, Eigen::VectorXd& y, Workspace& ws) const
    {
        ws.coeff = x;
        inv_primal_.apply(span(ws.coeff), ws.line, ws.work);
        y.noalias() = scaling_.A_hat * ws.coeff;
    }
    void At(const Eigen::VectorXd& y, Eigen::VectorXd& x, Workspace& ws) const
    {
        x.noalias() = scaling_.A_hat.transpose() * y;
        fwd_dual_.apply(span(x), ws.line, ws.work);
    }
    void Z(const Eigen::VectorXd& x, Eigen::VectorXd& y, Workspace& ws) const
    {
        ws.coeff = x;
        inv_dual_.apply(span(ws.coeff), ws.line, ws.work);
        y.noalias() = scaling_.Z_hat * ws.coeff;
    }
    void Zt(const Eigen::VectorXd& y, Eigen::VectorXd& x, Workspace& ws) const
    {
        x.noalias() = scaling_.Z_hat.transpose() * y;
        fwd_primal_.apply(span(x), ws.line, ws.work);
    }

    Eigen::VectorXd A(const Eigen::VectorXd& x) const { return run(&FrameSystem::A, x); }
    Eigen::VectorXd At(const Eigen::VectorXd& y) const { return run(&FrameSystem::At, y); }
    Eigen::VectorXd Z(const Eigen::VectorXd& x) const { return run(&FrameSystem::Z, x); }
    Eigen::VectorXd Zt(const Eigen::VectorXd& y) const { return run(&FrameSystem::Zt, y); }

    const TensorTransform& inverse_primal() const { return inv_primal_; }
    const TensorTransform& forward_primal() const { return fwd_primal_; }

    /// Samples f(t_m) in row order.
    template <class F>
    Eigen::VectorXd rhs(F&& f) const
    {
        return sample_rhs(grid_, std::forward<F>(f));
    }

    template <class F>
    static Eigen::VectorXd sample_rhs(const MaskedGrid& grid, F&& f)
    {
        Eigen::VectorXd b(grid.M());
        for (index_t r = 0; r < grid.M(); ++r) {
            const auto t = grid.point(r);
            const double v = f(std::span<const double>(t));
            if (!std::isfinite(v)) throw Error("function value is not finite at grid row " + std::to_string(r));
            b(r) = v;
        }
        return b;
    }

private:
    static std::span<double> span(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

    using Member = void (FrameSystem::*)(const Eigen::VectorXd&, Eigen::VectorXd&, Workspace&) const;
    Eigen::VectorXd run(Member m, const Eigen::VectorXd& in) const
    {
        Workspace ws;
        Eigen::VectorXd out;
        (this->*m)(in, out, ws);
        return out;
    }

    BasisSpec basis_;
    MaskedGrid grid_;
    TensorTransform inv_primal_, fwd_primal_, inv_dual_, fwd_dual_;
    std::vector<const DiscreteDual*> duals_;
    ScalingMatrices scaling_;
};

/// Explicit matrix of a linear map given by its action; guarded.
inline Eigen::MatrixXd materialize(index_t rows, index_t cols, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f)
{
    if (rows * cols > (index_t{1} << 25)) throw Error("dense materialization exceeds the memory guard");
    Eigen::MatrixXd D(rows, cols);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(cols);
    for (index_t k = 0; k < cols; ++k) {
        e(k) = 1.0;
        D.col(k) = f(e);
        e(k) = 0.0;
    }
    return D;
}

inline Eigen::MatrixXd dense_A(const FrameSystem& s)
{
    return materialize(s.rows(), s.cols(), [&](const Eigen::VectorXd& x) { return s.A(x); });
}

inline Eigen::MatrixXd dense_plunge(const FrameSystem& s)
{
    return materialize(s.rows(), s.cols(), [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd y = s.A(x);
        return Eigen::VectorXd(y - s.A(s.Zt(y)));
    });
}

/// Rows of the tensor W^{-1} for the given linear scaling indices.
inline SparseRM tensor_idwt_rows(std::span<const index_t> rows, const FilterBank& bank, const std::vector<int>& levels)
{
    if (levels.size() == 1) return sparse_idwt_rows(rows, bank, levels[0]);
    Shape shape;
    std::vector<ColumnFilters> cf;
    for (int J : levels) {
        shape.dims.push_back(index_t{1} << J);
        cf.push_back(idwt_column_filters(bank, J));
    }
    const std::size_t d = levels.size();
    std::vector<Eigen::Triplet<double, index_t>> trip;
    std::vector<std::vector<std::pair<index_t, double>>> ent(d);
    std::vector<index_t> idx(d);
    std::vector<std::size_t> it(d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto ri = shape.unravel(rows[i]);
        bool empty = false;
        for (std::size_t a = 0; a < d; ++a) {
            ent[a].clear();
            cf[a].for_each_in_row(ri[a], [&](index_t c, double v) {
                if (v != 0.0) ent[a].emplace_back(c, v);
            });
            if (ent[a].empty()) empty = true;
        }
        if (empty) continue;
        std::fill(it.begin(), it.end(), 0);
        for (;;) {
            double v = 1;
            for (std::size_t a = 0; a < d; ++a) {
                idx[a] = ent[a][it[a]].first;
                v *= ent[a][it[a]].second;
            }
            trip.emplace_back(static_cast<index_t>(i), shape.ravel(idx), v);
            std::size_t a = d;
            bool done = true;
            while (a-- > 0) {
                if (++it[a] < ent[a].size()) {
                    done = false;
                    break;
                }
                it[a] = 0;
            }
            if (done) break;
        }
    }
    SparseRM S(static_cast<index_t>(rows.size()), shape.total());
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
}

/// Scaling-level plunge restricted to the columns in K:
///     S_K = A_hat(:, K) - A_hat (Z_hat^T A_hat(:, K))     (M x #K)
inline SparseCM scaling_plunge_columns(const ScalingMatrices& s, const std::vector<index_t>& K)
{
    const index_t n = s.A_hat.cols();
    SparseCM E(n, static_cast<index_t>(K.size()));
    std::vector<Eigen::Triplet<double, index_t>> trip;
    for (std::size_t j = 0; j < K.size(); ++j) trip.emplace_back(K[j], static_cast<index_t>(j), 1.0);
    E.setFromTriplets(trip.begin(), trip.end());
    const SparseCM AK = SparseCM(s.A_hat) * E;
    const SparseCM ZtAK = SparseCM(s.Z_hat.transpose()) * AK;
    SparseCM S = AK - SparseCM(s.A_hat) * ZtAK;
    S.prune(0.0);
    return S;
}

/// Sparse plunge in wavelet coordinates: S_K * (rows K of W^{-1}), M x N.
inline SparseCM sparse_plunge(const FrameSystem& sys, const std::vector<index_t>& K)
{
    const SparseCM SK = scaling_plunge_columns(sys.scaling(), K);
    const SparseCM WK = SparseCM(tensor_idwt_rows(K, sys.bank(), sys.basis().levels));
    SparseCM P = SK * WK;
    P.prune(0.0);
    return P;
}

} // namespace wavext
