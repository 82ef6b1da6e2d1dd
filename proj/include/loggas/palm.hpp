/**
 * @brief Reduced Palm machinery for the Ginibre field: exact
 * normalization constants Z_{x,y}, truncated density ratios, and
 * conditional (pinned) sampling of the finite-N ensemble.
 *
 * Everything routes through one regularized evaluator,
 *
 *   log R(x) = log det[K(x_i,x_j)] − log |Δ(x)|²,   Δ = difference product,
 *
 * carried in log space throughout: |Δ(x)|² underflows already at m ≈ 6
 * for close points; det K vanishes quadratically at every coincidence.
 * Nearly coincident pairs (separation < 1e-6) are handled by the
 * continuity extension: the vanishing pair factor is divided out of the
 * determinant analytically (divided-difference row/column operations),
 * which is exact, not asymptotic. Higher-order confluences (three or
 * more mutually close points) are a documented error.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <loggas/errors.hpp>
#include <loggas/geometry.hpp>
#include <loggas/kernel.hpp>
#include <loggas/linalg.hpp>
#include <loggas/rng.hpp>
#include <loggas/sampling.hpp>

namespace loggas {

/// Pinned points plus a truncation radius ("all" = infinite).
struct PalmCondition {
    std::vector<Point> pinned;
    double truncation_radius = std::numeric_limits<double>::infinity();

    PalmCondition(std::vector<Point> pts, double r)
        : pinned(std::move(pts)), truncation_radius(r) {
        if (pinned.empty() || pinned.size() > 8)
            throw std::invalid_argument(
                "PalmCondition: need 1 <= m <= 8 pinned points");
        if (!(truncation_radius > 0.0))
            throw std::invalid_argument(
                "PalmCondition: truncation radius must be > 0 (or infinite)");
        for (std::size_t i = 0; i < pinned.size(); ++i) {
            if (!pinned[i].finite())
                throw std::invalid_argument("PalmCondition: non-finite point");
            for (std::size_t j = i + 1; j < pinned.size(); ++j)
                if ((pinned[i] - pinned[j]).norm() == 0.0)
                    throw std::invalid_argument(
                        "PalmCondition: pinned points must be pairwise distinct");
        }
    }

    static PalmCondition all(std::vector<Point> pts) {
        return PalmCondition(std::move(pts),
                             std::numeric_limits<double>::infinity());
    }
};

namespace detail {

/// Pair-degeneracy threshold of the continuity extension.
inline constexpr double kPalmPairThreshold = 1e-6;

/**
 * @brief log R(x) = log det K[x] − log|Δ(x)|², regularized.
 *
 * Uses the scaled matrix M = π·K (entries magnitude ≤ 1), so
 * det K = π^{−m} det M. For each close pair (a, b), s = x_b − x_a:
 * row_b ← (row_b − row_a)/s and col_b ← (col_b − col_a)/conj(s) divide
 * the vanishing factor |s|² out of det M exactly; the three entries with
 * catastrophic cancellation — (a,b), (b,a), (b,b) — are overwritten with
 * analytic forms built from expm1 (the scaled kernel on a close pair is
 * exp(−|s|²/2 + i·Im(x_a·conj(s)))). The matching factor |s|² is then
 * also dropped from |Δ(x)|².
 */
inline double log_regularized_ratio(const std::vector<Point>& x) {
    const std::size_t m = x.size();
    if (m == 0)
        throw std::invalid_argument("palm: empty point tuple");

    // Close-pair matching: each point may participate in at most one
    // degenerate pair (higher-order confluence is not implemented).
    std::vector<int> partner(m, -1);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            if ((x[i] - x[j]).norm() >= kPalmPairThreshold) continue;
            if (partner[i] != -1 || partner[j] != -1)
                throw NumericError(
                    "palm: higher-order confluence (three or more mutually "
                    "close points) is not supported by the continuity "
                    "extension");
            partner[i] = static_cast<int>(j);
            partner[j] = static_cast<int>(i);
        }

    // Scaled kernel matrix M = pi * K (infinite kernel).
    std::vector<std::complex<double>> M(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            M[i * m + j] = detail::scaled_kernel_infinite(x[i], x[j]);

    // Divided-difference operations per close pair (a < b).
    for (std::size_t a = 0; a < m; ++a) {
        const int b_signed = partner[a];
        if (b_signed < 0 || static_cast<std::size_t>(b_signed) < a) continue;
        const auto b = static_cast<std::size_t>(b_signed);
        const std::complex<double> s = (x[b] - x[a]).cplx();
        // Generic entries: numeric divided differences (relative error
        // ~ eps/|s| <= 1e-10 at the 1e-6 threshold).
        for (std::size_t j = 0; j < m; ++j)
            M[b * m + j] = (M[b * m + j] - M[a * m + j]) / s;
        const std::complex<double> sbar = std::conj(s);
        for (std::size_t i = 0; i < m; ++i)
            M[i * m + b] = (M[i * m + b] - M[i * m + a]) / sbar;
        // Analytic overwrite of the cancellation-critical entries.
        // With u = |s|²/2 and phi = Im(x_a·conj(s)):
        //   M_ab = exp(−u + i·phi),  M_aa = 1.
        const double u = 0.5 * std::norm(s);
        const double phi =
            x[a].im * s.real() - x[a].re * s.imag();  // Im(x_a * conj(s))
        const double em = std::exp(-u);
        const double sin_half = std::sin(0.5 * phi);
        // Re(M_ab − 1) = expm1(−u) − e^{−u}·2sin²(phi/2), stable.
        const std::complex<double> mab_minus_1{
            std::expm1(-u) - em * 2.0 * sin_half * sin_half, em * std::sin(phi)};
        M[a * m + b] = mab_minus_1 / sbar;
        M[b * m + a] = std::conj(mab_minus_1) / s;
        // Double divided difference (M_bb − M_ab − M_ba + M_aa)/(s·conj(s))
        //   = 2[−expm1(−u) + e^{−u}·2sin²(phi/2)] / |s|².
        M[b * m + b] = {2.0 *
                            (-std::expm1(-u) + em * 2.0 * sin_half * sin_half) /
                            std::norm(s),
                        0.0};
    }

    const linalg::LogDet ld = linalg::logdet_inplace(M, m);
    if (ld.singular || ld.phase.real() <= 0.0)
        throw NumericError(
            "palm: regularized kernel determinant is not positive "
            "(degenerate tuple beyond the continuity extension)");
    // det is real positive in exact arithmetic, so the phase is pure
    // rounding noise of unit modulus: use it only as a sanity gate above
    // and take the magnitude alone (projecting onto Re(phase) would bias
    // the result by log cos of the phase residue).
    const double log_det_M = ld.log_abs;

    // log |Δ(x)|² with matched close-pair factors dropped (they were
    // divided out of the determinant above).
    double log_delta2 = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            if (partner[i] == static_cast<int>(j)) continue;
            const double d2 = (x[i] - x[j]).norm2();
            if (d2 == 0.0)
                throw NumericError("palm: coincident points in tuple");
            log_delta2 += std::log(d2);
        }

    const double m_log_pi = static_cast<double>(m) * std::log(std::numbers::pi);
    return log_det_M - m_log_pi - log_delta2;
}

}  // namespace detail

/**
 * @brief log Z_{x,y} where
 * Z_{x,y} = (det K[x]/det K[y]) · (|Δ(y)|²/|Δ(x)|²),  Δ ≡ 1 for m = 1.
 *
 * The symmetric ratio of the two regularized quantities; exact under the
 * continuity extension for nearly coincident pairs.
 */
inline double palm_normalization_log(const std::vector<Point>& x,
                                     const std::vector<Point>& y) {
    if (x.size() != y.size())
        throw std::invalid_argument(
            "palm_normalization: tuples must have equal length m");
    if (x.empty())
        throw std::invalid_argument("palm_normalization: m must be >= 1");
    return detail::log_regularized_ratio(x) - detail::log_regularized_ratio(y);
}

/// Z_{x,y} as a plain number; the log form is the primitive. Values with
/// |log Z| > 700 cannot be represented as doubles — callers are pointed
/// at palm_normalization_log instead of receiving inf/0.
inline double palm_normalization(const std::vector<Point>& x,
                                 const std::vector<Point>& y) {
    const double lz = palm_normalization_log(x, y);
    if (std::abs(lz) > 700.0)
        throw NumericError(
            "palm_normalization: |log Z| = " + std::to_string(lz) +
            " exceeds double range; use palm_normalization_log");
    return std::exp(lz);
}

/**
 * @brief log of the truncated Palm density ratio
 *
 *   (1/Z_{x,y}) · Π_{|s_j| < r} |x − s_j|² / |y − s_j|²,
 *
 * |x − s_j| = Π_i |x_i − s_j|; the r → ∞ limit is the Radon–Nikodym
 * derivative dμ_x/dμ_y. Configuration points must stay clear of every
 * pinned point (1e-12), else the density is singular/zero there.
 */
inline double palm_density_ratio_log(const std::vector<Point>& x,
                                     const std::vector<Point>& y,
                                     const Configuration& config, double r) {
    double acc = -palm_normalization_log(x, y);
    for (const Point& s : config.points()) {
        if (!(s.norm() < r)) continue;
        for (const Point& xi : x) {
            const double d2 = (xi - s).norm2();
            if (d2 < 1e-24)
                throw NumericError(
                    "palm_density_ratio: configuration point coincides with a "
                    "conditioned point (within 1e-12)");
            acc += std::log(d2);
        }
        for (const Point& yi : y) {
            const double d2 = (yi - s).norm2();
            if (d2 < 1e-24)
                throw NumericError(
                    "palm_density_ratio: configuration point coincides with a "
                    "conditioned point (within 1e-12)");
            acc -= std::log(d2);
        }
    }
    return acc;
}

inline double palm_density_ratio(const std::vector<Point>& x,
                                 const std::vector<Point>& y,
                                 const Configuration& config, double r) {
    return std::exp(palm_density_ratio_log(x, y, config, r));
}

/**
 * @brief MCMC sampler for the finite-N Ginibre ensemble conditioned on
 * pinned particles; returns the reduced configuration (free points
 * only).
 *
 * Target density on the N−m free points:
 *   Π_{i<j free} |z_i−z_j|² · Π_{pinned k} Π_{free i} |x_k − z_i|²
 *   · e^{−Σ_free |z_i|²}.
 *
 * Metropolis with single-particle Gaussian moves; n_steps sweeps of
 * N−m proposals each. The pinned list may be empty (degenerate call:
 * the unconditioned finite-N ensemble via the same chain).
 */
inline Configuration sample_palm_finite(int N, const std::vector<Point>& pinned,
                                        std::uint64_t n_steps,
                                        std::uint64_t seed) {
    const std::size_t m = pinned.size();
    if (N < static_cast<int>(m) + 1)
        throw std::invalid_argument("sample_palm_finite: need N >= m + 1");
    const std::size_t nfree = static_cast<std::size_t>(N) - m;
    rng::PhiloxStream g(seed);
    const double bulk = std::sqrt(static_cast<double>(N));

    // log of the unnormalized target restricted to particle i.
    const auto log_weight_at = [&](const std::vector<Point>& z, std::size_t i,
                                   Point p) {
        double acc = -p.norm2();
        for (std::size_t j = 0; j < z.size(); ++j) {
            if (j == i) continue;
            const double d2 = (p - z[j]).norm2();
            if (d2 == 0.0) return -std::numeric_limits<double>::infinity();
            acc += std::log(d2);
        }
        for (const Point& xk : pinned) {
            const double d2 = (p - xk).norm2();
            if (d2 == 0.0) return -std::numeric_limits<double>::infinity();
            acc += std::log(d2);
        }
        return acc;
    };

    // Start uniform in the bulk disk.
    std::vector<Point> z(nfree);
    const Window bulk_disk = Window::disk(bulk);
    for (auto& p : z) p = uniform_in_window(g, bulk_disk);

    const std::uint64_t total = n_steps * nfree;
    const std::uint64_t tail_start = total - total / 10;
    std::uint64_t proposals = 0, tail_proposals = 0, tail_accepts = 0;
    const double step_scale = 0.7;  // ~ bulk spacing

    for (std::uint64_t sweep = 0; sweep < n_steps; ++sweep) {
        for (std::size_t i = 0; i < nfree; ++i, ++proposals) {
            const bool in_tail = proposals >= tail_start;
            if (in_tail) ++tail_proposals;
            const Point prop =
                z[i] + Point{step_scale * g.normal(), step_scale * g.normal()};
            const double log_a =
                log_weight_at(z, i, prop) - log_weight_at(z, i, z[i]);
            if (log_a >= 0.0 || g.uniform() < std::exp(log_a)) {
                z[i] = prop;
                if (in_tail) ++tail_accepts;
            }
        }
    }

    if (tail_proposals >= 100 &&
        static_cast<double>(tail_accepts) <
            0.001 * static_cast<double>(tail_proposals))
        throw MixingFailure(
            "sample_palm_finite: acceptance rate below 0.1% over the last "
            "10% of sweeps");

    double rmax = bulk * 1.5;
    for (const Point& p : z) rmax = std::max(rmax, p.norm() * (1.0 + 1e-9));
    return Configuration(std::move(z), Window::disk(rmax),
                         ConfigMeta{"palm", seed});
}

/// PalmCondition-facing wrapper (m >= 1 enforced by the type).
inline Configuration sample_palm_finite(int N, const PalmCondition& cond,
                                        std::uint64_t n_steps,
                                        std::uint64_t seed) {
    return sample_palm_finite(N, cond.pinned, n_steps, seed);
}

}  // namespace loggas
