#pragma once

// Evaluation of scaling functions and wavelets at dyadic points from their
// masks: an eigenvector of the refinement matrix gives the integer samples,
// repeated two-scale refinement gives the finer levels.
//
// Endpoint convention: samples are left-closed on the support, i.e. the value
// at the right end of the support is 0 (Haar: phi(0) = 1, phi(1) = 0).

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "filters.hpp"

namespace wavext {

/// f(i / 2^level) for i = first, first + 1, ...; zero outside.
struct DyadicSamples {
    int level = 0;
    index_t first = 0;
    std::vector<double> values;

    index_t last() const { return first + static_cast<index_t>(values.size()) - 1; }

    double at(index_t i) const
    {
        if (i < first || i > last()) return 0.0;
        return values[static_cast<std::size_t>(i - first)];
    }

    double t(std::size_t i) const
    {
        return std::ldexp(static_cast<double>(first + static_cast<index_t>(i)), -level);
    }
};

namespace detail {

/// Refinement matrix T(k, m) = sqrt2 h_{2k - m} on the integer points
/// [h.first, h.last), right endpoint excluded.
inline Eigen::MatrixXd refinement_matrix(const Mask& h)
{
    const index_t n = h.size() - 1;
    Eigen::MatrixXd T(n, n);
    for (index_t k = 0; k < n; ++k)
        for (index_t m = 0; m < n; ++m)
            T(k, m) = std::numbers::sqrt2 * h[2 * (k + h.first()) - (m + h.first())];
    return T;
}

} // namespace detail

/// phi at the integers of its support, normalized to sum 1.
inline DyadicSamples scaling_at_integers(const Mask& h)
{
    if (h.size() < 2) throw Error("mask needs at least two taps");
    const Eigen::MatrixXd T = detail::refinement_matrix(h);
    const index_t n = T.rows();

    Eigen::EigenSolver<Eigen::MatrixXd> es(T, false);
    int multiplicity = 0;
    for (index_t i = 0; i < n; ++i)
        if (std::abs(es.eigenvalues()[i] - std::complex<double>(1.0, 0.0)) < 1e-8) ++multiplicity;
    if (multiplicity != 1)
        throw Error("refinement matrix has eigenvalue 1 with multiplicity " + std::to_string(multiplicity) +
                    " (degenerate mask)");

    // Shifted inverse iteration from the all-ones vector.
    const double shift = 1.0 + 1e-10;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(T - shift * Eigen::MatrixXd::Identity(n, n));
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd w = lu.solve(v);
        w /= w.norm();
        if (w.dot(v) < 0) w = -w;
        const double change = (w - v / v.norm()).norm();
        v = w;
        if (change < 1e-14) break;
    }
    v /= v.sum();
    const double vmax = v.cwiseAbs().maxCoeff();
    for (index_t i = 0; i < n; ++i)
        if (std::abs(v(i)) < 1e-15 * vmax) v(i) = 0.0;

    DyadicSamples s;
    s.level = 0;
    s.first = h.first();
    s.values.assign(v.data(), v.data() + n);
    s.values.push_back(0.0);  // right endpoint
    return s;
}

/// One level of two-scale refinement: phi(k/2^{j+1}) = sqrt2 sum_l h_l phi(k/2^j - l).
inline DyadicSamples refine(const DyadicSamples& s, const Mask& h)
{
    DyadicSamples out;
    out.level = s.level + 1;
    out.first = 2 * s.first;
    const index_t count = 2 * (s.last() - s.first) + 1;
    out.values.assign(static_cast<std::size_t>(count), 0.0);
    const index_t stride = index_t{1} << s.level;
    for (index_t i = 0; i < count; ++i) {
        const index_t k = out.first + i;
        double acc = 0;
        for (index_t l = h.first(); l <= h.last(); ++l) acc += h[l] * s.at(k - l * stride);
        out.values[static_cast<std::size_t>(i)] = std::numbers::sqrt2 * acc;
    }
    return out;
}

inline DyadicSamples scaling_at_level(const Mask& h, int level)
{
    DyadicSamples s = scaling_at_integers(h);
    for (int j = 0; j < level; ++j) s = refine(s, h);
    return s;
}

/// psi(t) = sqrt2 sum_k g_k phi(2t - k) sampled at resolution 2^-level.
inline DyadicSamples wavelet_at_dyadic(const FilterBank& bank, int level)
{
    if (level < 1) throw Error("wavelet evaluation needs level >= 1");
    const DyadicSamples phi = scaling_at_level(bank.h, level - 1);
    const index_t stride = index_t{1} << (level - 1);
    DyadicSamples out;
    out.level = level;
    out.first = phi.first + bank.g.first() * stride;
    const index_t lastidx = phi.last() + bank.g.last() * stride;
    out.values.assign(static_cast<std::size_t>(lastidx - out.first + 1), 0.0);
    for (index_t i = out.first; i <= lastidx; ++i) {
        double acc = 0;
        for (index_t k = bank.g.first(); k <= bank.g.last(); ++k) acc += bank.g[k] * phi.at(i - k * stride);
        out.values[static_cast<std::size_t>(i - out.first)] = std::numbers::sqrt2 * acc;
    }
    return out;
}

} // namespace wavext
