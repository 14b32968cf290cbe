#pragma once

// Regularized least-squares kernels.
//
//   randomized_lowrank_solve   adaptive randomized range finder + pivoted QR
//   pivoted_qr_solve           dense Householder QR with column pivoting
//   truncated_svd_solve        eps-truncated pseudoinverse (accuracy oracle)
//   sparse_qr_solve            rank-revealing sparse QR
//
// Every solver recomputes the residual from the returned solution.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "common.hpp"

namespace wavext {

inline constexpr double default_tol = 1e-10;
inline constexpr index_t dense_guard = index_t{1} << 25;

/// Matrix-free operator: y = op x and x = op^T y.
struct LinearOperator {
    index_t rows = 0, cols = 0;
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> apply;
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> adjoint;

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const
    {
        Eigen::VectorXd y;
        apply(x, y);
        return y;
    }
    Eigen::VectorXd T(const Eigen::VectorXd& y) const
    {
        Eigen::VectorXd x;
        adjoint(y, x);
        return x;
    }
};

inline LinearOperator dense_operator(const Eigen::MatrixXd& A)
{
    return {A.rows(), A.cols(), [&A](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = A * x; },
            [&A](const Eigen::VectorXd& y, Eigen::VectorXd& x) { x.noalias() = A.transpose() * y; }};
}

struct SolveReport {
    Eigen::VectorXd x;
    double residual = 0;
    double solution_norm = 0;
    index_t rank = 0;
    double seconds = 0;
    bool rank_cap_hit = false;
    std::string warning;
};

namespace detail {

using Clock = std::chrono::steady_clock;
inline double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

inline void finish(SolveReport& r, const Eigen::VectorXd& residual_vec, Clock::time_point t0)
{
    r.residual = residual_vec.norm();
    r.solution_norm = r.x.norm();
    r.seconds = seconds_since(t0);
}

inline void check_guard(index_t rows, index_t cols)
{
    if (rows * cols > dense_guard)
        throw Error("dense solve of " + std::to_string(rows) + "x" + std::to_string(cols) + " exceeds the memory guard");
}

} // namespace detail

// --- dense pivoted QR ------------------------------------------------------

/// Householder QR with column pivoting, A P = Q R. Q is kept implicitly as
/// reflectors below the diagonal of `qr` with scalars `tau`.
struct PivotedQR {
    Eigen::MatrixXd qr;
    Eigen::VectorXd tau;
    std::vector<index_t> perm;  ///< column k of A P is column perm[k] of A
    index_t steps = 0;

    /// Stops early once the largest remaining column norm is <= stop_tol
    /// times the largest initial column norm.
    explicit PivotedQR(Eigen::MatrixXd A, index_t max_steps = -1, double stop_tol = 0) : qr(std::move(A))
    {
        const index_t m = qr.rows(), n = qr.cols();
        const index_t kmax = max_steps < 0 ? std::min(m, n) : std::min({m, n, max_steps});
        tau = Eigen::VectorXd::Zero(kmax);
        perm.resize(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), index_t{0});
        Eigen::VectorXd norms(n), norms0(n);
        for (index_t j = 0; j < n; ++j) norms(j) = norms0(j) = qr.col(j).norm();
        const double nmax0 = n ? norms.maxCoeff() : 0.0;
        for (index_t k = 0; k < kmax; ++k) {
            index_t p;
            const double nk = norms.tail(n - k).maxCoeff(&p);
            if (nk <= stop_tol * nmax0) break;
            p += k;
            if (p != k) {
                qr.col(k).swap(qr.col(p));
                std::swap(norms(k), norms(p));
                std::swap(norms0(k), norms0(p));
                std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(p)]);
            }
            // reflector for qr(k:m, k)
            auto x = qr.col(k).segment(k, m - k);
            const double alpha = x.norm();
            if (alpha == 0.0) {
                tau(k) = 0;
            } else {
                const double beta = x(0) > 0 ? -alpha : alpha;
                const double v0 = x(0) - beta;
                x.tail(m - k - 1) /= v0;
                tau(k) = -v0 / beta;
                x(0) = beta;
                if (k + 1 < n) {
                    Eigen::VectorXd v(m - k);
                    v(0) = 1.0;
                    v.tail(m - k - 1) = x.tail(m - k - 1);
                    auto trailing = qr.block(k, k + 1, m - k, n - k - 1);
                    Eigen::RowVectorXd w = v.transpose() * trailing;
                    trailing.noalias() -= tau(k) * v * w;
                }
            }
            // downdate column norms, recompute when cancellation is severe
            for (index_t j = k + 1; j < n; ++j) {
                if (norms(j) == 0.0) continue;
                const double r = std::abs(qr(k, j)) / norms(j);
                double t = std::max(0.0, 1.0 - r * r);
                const double t2 = t * (norms(j) / norms0(j)) * (norms(j) / norms0(j));
                if (t2 <= 1e-8) {
                    norms(j) = norms0(j) = qr.col(j).segment(k + 1, m - k - 1).norm();
                } else {
                    norms(j) *= std::sqrt(t);
                }
            }
            steps = k + 1;
        }
    }

    double diag(index_t k) const { return qr(k, k); }

    /// Number of pivots with |R_kk| > tol * |R_00|.
    index_t rank(double tol) const
    {
        if (steps == 0) return 0;
        const double r0 = std::abs(qr(0, 0));
        if (r0 == 0.0) return 0;
        index_t r = 0;
        while (r < steps && std::abs(qr(r, r)) > tol * r0) ++r;
        return r;
    }

    /// In-place y <- Q^T y.
    void apply_qt(Eigen::VectorXd& y) const
    {
        const index_t m = qr.rows();
        for (index_t k = 0; k < steps; ++k) {
            if (tau(k) == 0) continue;
            const index_t len = m - k - 1;
            const double s = tau(k) * (y(k) + qr.col(k).tail(len).dot(y.tail(len)));
            y(k) -= s;
            y.tail(len) -= s * qr.col(k).tail(len);
        }
    }

    /// Q(:, 0:r) as an explicit matrix.
    Eigen::MatrixXd thin_q(index_t r) const
    {
        const index_t m = qr.rows();
        Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(m, r);
        Eigen::VectorXd v;
        for (index_t k = std::min(r, steps); k-- > 0;) {
            if (tau(k) == 0) continue;
            v.resize(m - k);
            v(0) = 1.0;
            v.tail(m - k - 1) = qr.col(k).tail(m - k - 1);
            auto blk = Q.bottomRows(m - k);
            Eigen::RowVectorXd w = v.transpose() * blk;
            blk.noalias() -= tau(k) * v * w;
        }
        return Q;
    }

    /// Basic solution on the first r pivots: R11 z = (Q^T b)(0:r), x(perm) = [z; 0].
    Eigen::VectorXd solve(const Eigen::VectorXd& b, index_t r) const
    {
        Eigen::VectorXd y = b;
        apply_qt(y);
        Eigen::VectorXd z = qr.topLeftCorner(r, r).triangularView<Eigen::Upper>().solve(y.head(r));
        Eigen::VectorXd x = Eigen::VectorXd::Zero(qr.cols());
        for (index_t k = 0; k < r; ++k) x(perm[static_cast<std::size_t>(k)]) = z(k);
        return x;
    }
};

inline SolveReport pivoted_qr_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol = default_tol)
{
    const auto t0 = detail::Clock::now();
    detail::check_guard(A.rows(), A.cols());
    if (b.size() != A.rows()) throw Error("right-hand side length does not match the matrix");
    PivotedQR f(A);
    SolveReport r;
    r.rank = f.rank(tol);
    r.x = f.solve(b, r.rank);
    detail::finish(r, A * r.x - b, t0);
    return r;
}

inline SolveReport truncated_svd_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol = default_tol)
{
    const auto t0 = detail::Clock::now();
    detail::check_guard(A.rows(), A.cols());
    if (b.size() != A.rows()) throw Error("right-hand side length does not match the matrix");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    SolveReport r;
    const double cut = s.size() ? tol * s(0) : 0.0;
    while (r.rank < s.size() && s(r.rank) > cut) ++r.rank;
    const index_t k = r.rank;
    Eigen::VectorXd c = svd.matrixU().leftCols(k).transpose() * b;
    r.x = svd.matrixV().leftCols(k) * c.cwiseQuotient(s.head(k));
    detail::finish(r, A * r.x - b, t0);
    return r;
}

/// Rank-revealing QR for sparse input: all-zero rows and columns are
/// dropped, the remaining block is factored by column-pivoted Householder QR
/// that stops once every remaining column norm is below tol * (max column
/// norm). Only the retained pivots get nonzero coefficients.
inline SolveReport sparse_qr_solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b, double tol = default_tol)
{
    const auto t0 = detail::Clock::now();
    if (b.size() != A.rows()) throw Error("right-hand side length does not match the matrix");
    std::vector<index_t> rmap(static_cast<std::size_t>(A.rows()), -1), cols, rows;
    for (index_t j = 0; j < A.outerSize(); ++j) {
        bool any = false;
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it) {
            if (it.value() == 0.0) continue;
            any = true;
            rmap[static_cast<std::size_t>(it.row())] = 0;
        }
        if (any) cols.push_back(j);
    }
    for (index_t i = 0; i < A.rows(); ++i)
        if (rmap[static_cast<std::size_t>(i)] >= 0) {
            rmap[static_cast<std::size_t>(i)] = static_cast<index_t>(rows.size());
            rows.push_back(i);
        }
    SolveReport r;
    r.x = Eigen::VectorXd::Zero(A.cols());
    if (!cols.empty()) {
        const index_t nr = static_cast<index_t>(rows.size()), nc = static_cast<index_t>(cols.size());
        detail::check_guard(nr, nc);
        Eigen::MatrixXd C = Eigen::MatrixXd::Zero(nr, nc);
        for (index_t c = 0; c < nc; ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, cols[static_cast<std::size_t>(c)]); it; ++it)
                C(rmap[static_cast<std::size_t>(it.row())], c) += it.value();
        PivotedQR qr(std::move(C), -1, tol);
        r.rank = qr.rank(tol);
        Eigen::VectorXd rb(nr);
        for (index_t i = 0; i < nr; ++i) rb(i) = b(rows[static_cast<std::size_t>(i)]);
        const Eigen::VectorXd xc = qr.solve(rb, r.rank);
        for (index_t c = 0; c < nc; ++c) r.x(cols[static_cast<std::size_t>(c)]) = xc(c);
    }
    detail::finish(r, A * r.x - b, t0);
    return r;
}

// --- randomized low-rank ---------------------------------------------------

struct LowRankOptions {
    double tol = default_tol;
    std::uint64_t seed = 0;
    index_t block = 16;
    index_t probes = 10;
    double safety = 0.1;
    index_t rank_cap = 0;        ///< 0: min(rows, cols)
    double reference_norm = 0;   ///< scale for tol; 0: estimated from the first sample block
};

/// op ~= Q B with Q orthonormal (rows x r); B^T = Q2 R P^T from a pivoted QR.
struct LowRankFactorization {
    index_t rank = 0;
    Eigen::MatrixXd Q;
    Eigen::MatrixXd Q2;          ///< cols x rank
    Eigen::MatrixXd R;           ///< rank x rank upper triangular
    std::vector<index_t> perm;
    double scale = 0;
    double achieved = 0;         ///< posterior estimate of ||(I - QQ^T) op||
    bool rank_cap_hit = false;
};

namespace detail {

inline Eigen::MatrixXd gaussian(index_t rows, index_t cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd;
    Eigen::MatrixXd G(rows, cols);
    for (index_t j = 0; j < cols; ++j)
        for (index_t i = 0; i < rows; ++i) G(i, j) = nd(rng);
    return G;
}

inline void project_out(const Eigen::MatrixXd& Q, index_t r, Eigen::MatrixXd& Y)
{
    if (r == 0) return;
    for (int pass = 0; pass < 2; ++pass) Y.noalias() -= Q.leftCols(r) * (Q.leftCols(r).transpose() * Y);
}

} // namespace detail

/// Adaptive randomized range finder: blocks of `block` Gaussian probes; the
/// first `probes` columns of each new block, projected against the current
/// basis, estimate the remaining error. Stops when that estimate drops
/// below safety * tol * scale.
inline LowRankFactorization randomized_range(const LinearOperator& op, const LowRankOptions& opt)
{
    LowRankFactorization f;
    const index_t m = op.rows, n = op.cols;
    const index_t cap = opt.rank_cap > 0 ? std::min({opt.rank_cap, m, n}) : std::min(m, n);
    std::mt19937_64 rng(opt.seed);
    f.Q.resize(m, std::min<index_t>(cap, 4 * opt.block));
    f.scale = opt.reference_norm;
    index_t r = 0;
    Eigen::VectorXd y;
    const double gauss_norm = std::sqrt(static_cast<double>(n));
    while (true) {
        const index_t k = opt.block;
        Eigen::MatrixXd G = detail::gaussian(n, k, rng);
        Eigen::MatrixXd Y(m, k);
        for (index_t j = 0; j < k; ++j) {
            op.apply(G.col(j), y);
            Y.col(j) = y;
        }
        if (f.scale <= 0) {
            double mx = 0;
            for (index_t j = 0; j < k; ++j) mx = std::max(mx, Y.col(j).norm() / gauss_norm);
            f.scale = mx > 0 ? mx : 1.0;
        }
        detail::project_out(f.Q, r, Y);
        double est = 0;
        for (index_t j = 0; j < std::min(opt.probes, k); ++j) est = std::max(est, Y.col(j).norm());
        f.achieved = est;
        if (est <= opt.safety * opt.tol * f.scale) break;
        if (r >= cap) {
            f.rank_cap_hit = true;
            break;
        }
        // orthonormalize the block, dropping directions already captured
        const double drop = opt.safety * opt.tol * f.scale;
        // Y is already orthogonal to the old basis; only the new columns of
        // this block are projected out again
        const index_t r0 = r;
        for (index_t j = 0; j < k && r < cap; ++j) {
            Eigen::VectorXd v = Y.col(j);
            if (r > r0)
                for (int pass = 0; pass < 2; ++pass) v -= f.Q.middleCols(r0, r - r0) * (f.Q.middleCols(r0, r - r0).transpose() * v);
            const double nv = v.norm();
            if (nv <= drop) continue;
            if (r == f.Q.cols()) f.Q.conservativeResize(Eigen::NoChange, std::min(cap, 2 * f.Q.cols() + opt.block));
            f.Q.col(r++) = v / nv;
        }
        if (r >= cap) {
            f.rank_cap_hit = r < std::min(m, n);
            if (!f.rank_cap_hit) f.achieved = 0;
            break;
        }
    }
    f.Q.conservativeResize(Eigen::NoChange, r);
    f.rank = r;
    return f;
}

/// Completes the factorization: B^T = op^T Q, pivoted QR of B^T truncated at
/// tol * scale.
inline void factor_small(const LinearOperator& op, LowRankFactorization& f, double tol)
{
    const index_t r = f.Q.cols();
    Eigen::MatrixXd Bt(op.cols, r);
    Eigen::VectorXd x;
    for (index_t j = 0; j < r; ++j) {
        op.adjoint(f.Q.col(j), x);
        Bt.col(j) = x;
    }
    PivotedQR qr(std::move(Bt));
    index_t k = 0;
    while (k < qr.steps && std::abs(qr.diag(k)) > tol * f.scale) ++k;
    f.rank = k;
    f.R = qr.qr.topLeftCorner(k, k).triangularView<Eigen::Upper>();
    f.Q2 = qr.thin_q(k);
    f.perm = qr.perm;
}

/// Minimum-norm least-squares solution on the detected numerical range:
///   op ~= Q B, B = P R^T Q2^T  =>  x = Q2 R^{-T} P^T Q^T b.
inline SolveReport randomized_lowrank_solve(const LinearOperator& op, const Eigen::VectorXd& b, const LowRankOptions& opt = {})
{
    const auto t0 = detail::Clock::now();
    if (b.size() != op.rows) throw Error("right-hand side length does not match the operator");
    LowRankFactorization f = randomized_range(op, opt);
    factor_small(op, f, opt.tol);
    SolveReport rep;
    rep.rank = f.rank;
    rep.rank_cap_hit = f.rank_cap_hit;
    if (f.rank_cap_hit) rep.warning = "rank cap " + std::to_string(f.Q.cols()) + " reached before the range was captured";
    const Eigen::VectorXd c = f.Q.transpose() * b;
    Eigen::VectorXd pc(f.rank);
    for (index_t i = 0; i < f.rank; ++i) pc(i) = c(f.perm[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd z = f.R.transpose().triangularView<Eigen::Lower>().solve(pc);
    rep.x = f.Q2 * z;
    if (rep.x.size() == 0) rep.x = Eigen::VectorXd::Zero(op.cols);
    Eigen::VectorXd ax;
    op.apply(rep.x, ax);
    detail::finish(rep, ax - b, t0);
    return rep;
}

/// Numerical rank of op at threshold tol * scale: randomized range, then the
/// singular values of the small factor B = Q^T op.
inline index_t randomized_rank(const LinearOperator& op, const LowRankOptions& opt)
{
    LowRankFactorization f = randomized_range(op, opt);
    const index_t r = f.Q.cols();
    if (r == 0) return 0;
    Eigen::MatrixXd Bt(op.cols, r);
    Eigen::VectorXd x;
    for (index_t j = 0; j < r; ++j) {
        op.adjoint(f.Q.col(j), x);
        Bt.col(j) = x;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Bt);
    const auto& s = svd.singularValues();
    index_t k = 0;
    while (k < s.size() && s(k) > opt.tol * f.scale) ++k;
    return k;
}

/// Largest singular value by power iteration on op^T op.
inline double estimate_norm(const LinearOperator& op, std::uint64_t seed = 0, int iterations = 30)
{
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    Eigen::VectorXd x = detail::gaussian(op.cols, 1, rng).col(0), y;
    double sigma = 0;
    for (int it = 0; it < iterations; ++it) {
        const double nx = x.norm();
        if (nx == 0) return 0;
        x /= nx;
        op.apply(x, y);
        const double s = y.norm();
        op.adjoint(y, x);
        if (it > 3 && std::abs(s - sigma) <= 1e-6 * s) {
            sigma = s;
            break;
        }
        sigma = s;
    }
    return sigma;
}

} // namespace wavext
