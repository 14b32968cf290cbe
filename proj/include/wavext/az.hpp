#pragma once

// AZ pipelines for the collocation system A x = b.
//
//   step 1   (I - A Z*) A W x1 = (I - A Z*) b        (W = I unless smoothed)
//   step 2   x2 = Z* (b - A W x1)
//   result   x = W x1 + x2
//
// vanilla  step 1 matrix-free on the full M x N plunge operator
// reduced  step 1 restricted to rows Mrows and columns L
// sparse   step 1 assembled as a sparse matrix and solved by sparse QR

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "domain.hpp"
#include "solvers.hpp"
#include "system.hpp"

namespace wavext {

enum class Variant { vanilla, reduced, sparse };

inline const char* variant_name(Variant v)
{
    switch (v) {
    case Variant::vanilla: return "az";
    case Variant::reduced: return "reduced";
    case Variant::sparse: return "sparse";
    }
    return "?";
}

struct AZOptions {
    double tol = default_tol;
    std::uint64_t seed = 0;
    index_t rank_cap = 0;
};

struct AZProblem {
    const FrameSystem* sys = nullptr;
    Eigen::VectorXd b;
    IndexSets sets;
    std::optional<Eigen::VectorXd> weights;  ///< diagonal of W, one entry per coefficient
};

inline AZProblem make_problem(const FrameSystem& sys, Eigen::VectorXd b)
{
    if (b.size() != sys.rows()) throw Error("sample vector length does not match the grid");
    return {&sys, std::move(b), compute_index_sets(sys.grid(), sys.bank()), std::nullopt};
}

struct AZSolution {
    Eigen::VectorXd x;
    double residual = 0;
    double coef_norm = 0;
    std::vector<double> scale_norms;           ///< per scale, coarse to fine
    std::vector<double> exterior_scale_norms;  ///< same, restricted to exterior_coefficients
    std::map<std::string, double> timings;
    index_t plunge_rank = 0;
    bool rank_cap_hit = false;
    std::string warning;
};

// --- scales ----------------------------------------------------------------

/// Scale of a tensor coefficient: Jmax - min_i (J_i - band_i), so the finest
/// band in any dimension decides. 0 is the coarsest scaling coefficient.
inline std::vector<int> coefficient_scales(const std::vector<int>& levels)
{
    Shape shape;
    int jmax = 0;
    for (int J : levels) {
        shape.dims.push_back(index_t{1} << J);
        jmax = std::max(jmax, J);
    }
    std::vector<int> s(static_cast<std::size_t>(shape.total()));
    std::vector<index_t> idx;
    for (index_t k = 0; k < shape.total(); ++k) {
        idx = shape.unravel(k);
        int delta = jmax;
        for (std::size_t a = 0; a < levels.size(); ++a) delta = std::min(delta, levels[a] - coefficient_band(idx[a]));
        s[static_cast<std::size_t>(k)] = jmax - delta;
    }
    return s;
}

inline std::vector<double> scale_norms(const Eigen::VectorXd& x, const std::vector<int>& levels, const std::vector<char>* select = nullptr)
{
    const auto sc = coefficient_scales(levels);
    const int jmax = *std::max_element(levels.begin(), levels.end());
    std::vector<double> n2(static_cast<std::size_t>(jmax + 1), 0.0);
    for (index_t k = 0; k < x.size(); ++k)
        if (!select || (*select)[static_cast<std::size_t>(k)]) n2[static_cast<std::size_t>(sc[static_cast<std::size_t>(k)])] += x(k) * x(k);
    for (auto& v : n2) v = std::sqrt(v);
    return n2;
}

/// Extension-region coefficients: those whose primal function reaches
/// outside Omega (boundary-straddling and fully exterior ones).
inline std::vector<char> exterior_coefficients(const FrameSystem& sys)
{
    const auto outside = detail::scaling_select(sys.grid(), sys.bank(), [](index_t c, index_t size) { return c < size; });
    std::vector<char> ext(static_cast<std::size_t>(sys.cols()), 0);
    for (auto k : propagate_to_coefficients(outside, sys.bank(), sys.basis().levels)) ext[static_cast<std::size_t>(k)] = 1;
    return ext;
}

/// Weight list e_1..e_L mapped to scales: the finest L-1 scales get
/// e_L, e_{L-1}, ..., e_2 (finest first); all coarser scales get e_1.
inline Eigen::VectorXd scale_weights(const std::vector<int>& levels, const std::vector<double>& e)
{
    if (e.empty()) throw Error("weight list is empty");
    for (double v : e)
        if (!(v > 0)) throw Error("weights must be positive");
    const auto sc = coefficient_scales(levels);
    const int jmax = *std::max_element(levels.begin(), levels.end());
    const int L = static_cast<int>(e.size());
    Eigen::VectorXd w(static_cast<index_t>(sc.size()));
    for (std::size_t k = 0; k < sc.size(); ++k) {
        const int delta = jmax - sc[k];  // 0 for the finest scale
        w(static_cast<index_t>(k)) = delta < L - 1 ? e[static_cast<std::size_t>(L - 1 - delta)] : e[0];
    }
    return w;
}

/// Weights multiplied by `factor` per step towards finer scales.
inline Eigen::VectorXd geometric_weights(const std::vector<int>& levels, double factor)
{
    const auto sc = coefficient_scales(levels);
    Eigen::VectorXd w(static_cast<index_t>(sc.size()));
    for (std::size_t k = 0; k < sc.size(); ++k) w(static_cast<index_t>(k)) = std::pow(factor, sc[k]);
    return w;
}

// --- operators -------------------------------------------------------------

namespace detail {

inline double seconds_between(Clock::time_point a, Clock::time_point b) { return std::chrono::duration<double>(b - a).count(); }

/// (I - A Z*) A W on the full index ranges.
inline LinearOperator plunge_operator(const FrameSystem& sys, const Eigen::VectorXd* w)
{
    auto ws = std::make_shared<Workspace>();
    auto t1 = std::make_shared<Eigen::VectorXd>(), t2 = std::make_shared<Eigen::VectorXd>();
    LinearOperator op;
    op.rows = sys.rows();
    op.cols = sys.cols();
    op.apply = [&sys, w, ws, t1, t2](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        if (w) *t1 = x.cwiseProduct(*w);
        sys.A(w ? *t1 : x, y, *ws);
        sys.Zt(y, *t2, *ws);
        sys.A(*t2, *t1, *ws);
        y -= *t1;
    };
    op.adjoint = [&sys, w, ws, t1, t2](const Eigen::VectorXd& y, Eigen::VectorXd& x) {
        sys.At(y, *t1, *ws);
        sys.Z(*t1, *t2, *ws);
        *t2 = y - *t2;
        sys.At(*t2, x, *ws);
        if (w) x = x.cwiseProduct(*w);
    };
    return op;
}

/// R P E: rows restricted to `rows`, columns extended from `cols`.
inline LinearOperator restricted(const LinearOperator& full, const std::vector<index_t>& rows, const std::vector<index_t>& cols)
{
    auto xf = std::make_shared<Eigen::VectorXd>(), yf = std::make_shared<Eigen::VectorXd>();
    LinearOperator op;
    op.rows = static_cast<index_t>(rows.size());
    op.cols = static_cast<index_t>(cols.size());
    op.apply = [full, &rows, &cols, xf, yf](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        xf->setZero(full.cols);
        for (std::size_t j = 0; j < cols.size(); ++j) (*xf)(cols[j]) = x(static_cast<index_t>(j));
        full.apply(*xf, *yf);
        y.resize(static_cast<index_t>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<index_t>(i)) = (*yf)(rows[i]);
    };
    op.adjoint = [full, &rows, &cols, xf, yf](const Eigen::VectorXd& y, Eigen::VectorXd& x) {
        yf->setZero(full.rows);
        for (std::size_t i = 0; i < rows.size(); ++i) (*yf)(rows[i]) = y(static_cast<index_t>(i));
        full.adjoint(*yf, *xf);
        x.resize(static_cast<index_t>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) x(static_cast<index_t>(j)) = (*xf)(cols[j]);
    };
    return op;
}

inline LinearOperator frame_A(const FrameSystem& sys)
{
    auto ws = std::make_shared<Workspace>();
    return {sys.rows(), sys.cols(), [&sys, ws](const Eigen::VectorXd& x, Eigen::VectorXd& y) { sys.A(x, y, *ws); },
            [&sys, ws](const Eigen::VectorXd& y, Eigen::VectorXd& x) { sys.At(y, x, *ws); }};
}

} // namespace detail

/// ||A||_2 by power iteration (deterministic for a fixed seed).
inline double operator_norm(const FrameSystem& sys, std::uint64_t seed = 0)
{
    return estimate_norm(detail::frame_A(sys), seed);
}

// --- pipelines -------------------------------------------------------------

/// Any variant, optionally weighted (the smoothed algorithm when weights are set).
inline AZSolution az_pipeline(const AZProblem& prob, Variant variant, const AZOptions& opt = {})
{
    using detail::Clock;
    const FrameSystem& sys = *prob.sys;
    const auto t0 = Clock::now();
    const Eigen::VectorXd* w = prob.weights ? &*prob.weights : nullptr;
    if (w) {
        if (w->size() != sys.cols()) throw Error("weight vector length does not match the coefficients");
        if ((w->array() <= 0).any()) throw Error("weights must be positive");
    }
    AZSolution sol;
    Workspace ws;

    // rhs of step 1: (I - A Z*) b
    Eigen::VectorXd zb, azb;
    sys.Zt(prob.b, zb, ws);
    sys.A(zb, azb, ws);
    const Eigen::VectorXd r1 = prob.b - azb;

    const double anorm = operator_norm(sys, opt.seed) * (w ? w->maxCoeff() : 1.0);
    LowRankOptions lro;
    lro.tol = opt.tol;
    lro.seed = opt.seed;
    lro.rank_cap = opt.rank_cap;
    lro.reference_norm = anorm;
    const auto t_setup = Clock::now();

    Eigen::VectorXd x1 = Eigen::VectorXd::Zero(sys.cols());
    if (variant == Variant::vanilla) {
        const LinearOperator P = detail::plunge_operator(sys, w);
        const SolveReport rep = randomized_lowrank_solve(P, r1, lro);
        x1 = rep.x;
        sol.plunge_rank = rep.rank;
        sol.rank_cap_hit = rep.rank_cap_hit;
        sol.warning = rep.warning;
    } else if (variant == Variant::reduced) {
        const auto& rows = prob.sets.Mrows;
        const auto& cols = prob.sets.L;
        if (!rows.empty() && !cols.empty()) {
            const LinearOperator P = detail::plunge_operator(sys, w);
            const LinearOperator RPE = detail::restricted(P, rows, cols);
            Eigen::VectorXd rr(static_cast<index_t>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i) rr(static_cast<index_t>(i)) = r1(rows[i]);
            const SolveReport rep = randomized_lowrank_solve(RPE, rr, lro);
            for (std::size_t j = 0; j < cols.size(); ++j) x1(cols[j]) = rep.x(static_cast<index_t>(j));
            sol.plunge_rank = rep.rank;
            sol.rank_cap_hit = rep.rank_cap_hit;
            sol.warning = rep.warning;
        }
    } else {
        if (!prob.sets.K.empty()) {
            SparseCM S = sparse_plunge(sys, prob.sets.K);
            if (w) S = S * w->asDiagonal();
            // relative to ||A|| rather than the largest plunge column
            const double maxcol = [&] {
                double m = 0;
                for (index_t j = 0; j < S.outerSize(); ++j) m = std::max(m, S.col(j).norm());
                return m;
            }();
            const double tol = maxcol > 0 ? opt.tol * anorm / maxcol : opt.tol;
            const SolveReport rep = sparse_qr_solve(S, r1, tol);
            x1 = rep.x;
            sol.plunge_rank = rep.rank;
        }
    }
    const auto t_step1 = Clock::now();

    Eigen::VectorXd wx1 = w ? Eigen::VectorXd(x1.cwiseProduct(*w)) : x1;
    Eigen::VectorXd awx1, x2;
    sys.A(wx1, awx1, ws);
    sys.Zt(Eigen::VectorXd(prob.b - awx1), x2, ws);
    sol.x = wx1 + x2;
    const auto t_step2 = Clock::now();

    Eigen::VectorXd ax;
    sys.A(sol.x, ax, ws);
    sol.residual = (ax - prob.b).norm();
    sol.coef_norm = sol.x.norm();
    sol.scale_norms = scale_norms(sol.x, sys.basis().levels);
    const auto ext = exterior_coefficients(sys);
    sol.exterior_scale_norms = scale_norms(sol.x, sys.basis().levels, &ext);
    sol.timings["setup"] = detail::seconds_between(t0, t_setup);
    sol.timings["step1"] = detail::seconds_between(t_setup, t_step1);
    sol.timings["step2"] = detail::seconds_between(t_step1, t_step2);
    sol.timings["total"] = detail::seconds_between(t0, t_step2);
    return sol;
}

inline AZSolution az_solve(const AZProblem& p, const AZOptions& o = {}) { return az_pipeline(p, Variant::vanilla, o); }
inline AZSolution reduced_az_solve(const AZProblem& p, const AZOptions& o = {}) { return az_pipeline(p, Variant::reduced, o); }
inline AZSolution sparse_az_solve(const AZProblem& p, const AZOptions& o = {}) { return az_pipeline(p, Variant::sparse, o); }

inline AZSolution smoothed_az_solve(AZProblem p, const Eigen::VectorXd& weights, Variant variant = Variant::vanilla, const AZOptions& o = {})
{
    p.weights = weights;
    return az_pipeline(p, variant, o);
}

struct AdaptiveResult {
    AZSolution solution;
    std::vector<double> e;          ///< weight list used in the final solve
    std::vector<index_t> sizes;     ///< n_0 (first dimension) of every solve
};

/// Smallest per-dimension start: n_i >= 4 (support length), common shift.
inline int adaptive_start_shift(const BasisSpec& basis)
{
    const index_t need = 4 * (basis.bank.h.size() - 1);
    int shift = 64;
    for (int J : basis.levels) {
        int s = 0;
        while (J - s - 1 >= 1 && (index_t{1} << (J - s - 1)) >= need) ++s;
        shift = std::min(shift, s);
    }
    return shift;
}

/// Adaptively weighted AZ: solve at coarse n with weight ||b||, append each
/// residual to the weight list, double n until it reaches N.
template <class F>
AdaptiveResult adaptive_weighted_solve(const BasisSpec& basis, const DomainMask& mask, F&& f, Variant variant = Variant::reduced,
                                       const AZOptions& opt = {})
{
    AdaptiveResult out;
    int shift = adaptive_start_shift(basis);
    std::vector<double> e;
    for (;;) {
        BasisSpec bn = basis;
        for (auto& J : bn.levels) J -= shift;
        std::optional<FrameSystem> sys;
        try {
            sys.emplace(FrameSystem::build(bn, mask));
        } catch (const ConfigError&) {
            if (shift == 0) throw;
            if (e.empty()) {  // too few points at this coarse level; start finer
                --shift;
                continue;
            }
            throw;
        }
        AZProblem prob = make_problem(*sys, sys->rhs(f));
        if (e.empty()) e.push_back(prob.b.norm());
        prob.weights = scale_weights(bn.levels, e);
        out.solution = az_pipeline(prob, variant, opt);
        out.e = e;
        out.sizes.push_back(index_t{1} << bn.levels[0]);
        if (shift == 0) break;
        e.push_back(out.solution.residual);
        --shift;
    }
    return out;
}

// --- plunge rank -----------------------------------------------------------

struct PlungeRank {
    index_t randomized = 0;
    index_t dense = -1;  ///< dense SVD cross-check, -1 when skipped
};

inline PlungeRank plunge_rank(const FrameSystem& sys, double tol = default_tol, std::uint64_t seed = 0, index_t dense_limit = 1024)
{
    PlungeRank out;
    const double anorm = operator_norm(sys, seed);
    LowRankOptions lro;
    lro.tol = tol;
    lro.seed = seed;
    lro.reference_norm = anorm;
    out.randomized = randomized_rank(detail::plunge_operator(sys, nullptr), lro);
    if (sys.cols() <= dense_limit) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(dense_plunge(sys));
        const auto& s = svd.singularValues();
        index_t k = 0;
        while (k < s.size() && s(k) > tol * anorm) ++k;
        out.dense = k;
    }
    return out;
}

} // namespace wavext
