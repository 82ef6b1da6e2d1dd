/**
 * @brief Samplers for the three equilibrium families under study:
 * Ginibre (exact, via dense eigenvalues), Poisson, and Ruelle-class
 * Gibbs (grand-canonical Metropolis–Hastings).
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <lapacke.h>

#include <loggas/errors.hpp>
#include <loggas/geometry.hpp>
#include <loggas/rng.hpp>

namespace loggas {

/**
 * @brief Exact finite-N Ginibre ensemble: the N eigenvalues of an N×N
 * matrix with independent standard complex Gaussian entries (real and
 * imaginary parts independent N(0, 1/2)).
 *
 * Joint density ∝ Π_{i<j}|z_i−z_j|² e^{−Σ|z_i|²}; bulk intensity 1/π on
 * the disk of radius √N. Window: disk of radius √N·1.5 (grown in the
 * measure-zero event of an eigenvalue outlier, to keep the containment
 * invariant honest).
 */
inline Configuration sample_ginibre(int N, std::uint64_t seed) {
    if (N < 1) throw std::invalid_argument("sample_ginibre: N must be >= 1");
    const auto n = static_cast<std::size_t>(N);
    rng::PhiloxStream g(seed);

    // Column-major N×N complex matrix. (LAPACKE's row-major path insists
    // on ldvl >= n even with jobvl='N'; column-major has no such snag.)
    std::vector<std::complex<double>> a(n * n);
    const double s = 1.0 / std::sqrt(2.0);
    for (auto& entry : a) entry = {s * g.normal(), s * g.normal()};

    std::vector<std::complex<double>> w(n);
    const lapack_int info = LAPACKE_zgeev(
        LAPACK_COL_MAJOR, 'N', 'N', static_cast<lapack_int>(N),
        reinterpret_cast<lapack_complex_double*>(a.data()),
        static_cast<lapack_int>(N),
        reinterpret_cast<lapack_complex_double*>(w.data()), nullptr, 1, nullptr,
        1);
    if (info != 0)
        throw EigenFailure(
            "sample_ginibre: zgeev failed to converge, info=" +
                std::to_string(info),
            seed);

    std::vector<Point> pts;
    pts.reserve(n);
    double rmax = 0.0;
    for (const auto& z : w) {
        pts.push_back(Point{z.real(), z.imag()});
        rmax = std::max(rmax, pts.back().norm());
    }
    double R = std::sqrt(static_cast<double>(N)) * 1.5;
    if (rmax >= R) R = rmax * (1.0 + 1e-9);
    return Configuration(std::move(pts), Window::disk(R),
                         ConfigMeta{"ginibre", seed});
}

/// Uniform point in a window (disk: radius by inverse-CDF, r = R√u).
inline Point uniform_in_window(rng::PhiloxStream& g, const Window& w) {
    if (w.kind == Window::Kind::disk) {
        const double r = w.radius * std::sqrt(g.uniform());
        const double th = 2.0 * std::numbers::pi * g.uniform();
        return w.center + Point{r * std::cos(th), r * std::sin(th)};
    }
    return w.center + Point{g.uniform_in(-w.half_width, w.half_width),
                            g.uniform_in(-w.half_height, w.half_height)};
}

/// Homogeneous Poisson field: count ~ Poisson(intensity·area), points
/// i.i.d. uniform in the window.
inline Configuration sample_poisson(double intensity, const Window& window,
                                    std::uint64_t seed) {
    if (!(intensity > 0.0))
        throw std::invalid_argument("sample_poisson: intensity must be > 0");
    const double mean = intensity * window.area();
    if (!(mean < 1e7))
        throw std::invalid_argument(
            "sample_poisson: intensity*area must be < 1e7");
    rng::PhiloxStream g(seed);
    const std::uint64_t count = g.poisson(mean);
    std::vector<Point> pts;
    pts.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i)
        pts.push_back(uniform_in_window(g, window));
    return Configuration(std::move(pts), window, ConfigMeta{"poisson", seed});
}

/**
 * @brief Ruelle-class pair interaction for the Gibbs sampler and the
 * gradient dynamics.
 *
 * Ψ symmetric (Ψ(x) = Ψ(−x)), evaluable everywhere except possibly 0;
 * hard cores are encoded as +∞ inside the core radius. The activity z
 * enters the grand-canonical density ∝ z^n e^{−β Σ Ψ}.
 */
struct GibbsPotential {
    std::function<double(Point)> psi;
    double beta = 2.0;
    double activity = 1.0;
    /// Pairs beyond this separation contribute zero energy (cost guard
    /// for rapidly decaying potentials); +inf means no cutoff.
    double cutoff_radius = std::numeric_limits<double>::infinity();

    [[nodiscard]] double pair_energy(Point a, Point b) const {
        const Point d = a - b;
        if (d.norm() > cutoff_radius) return 0.0;
        return psi(d);
    }

    static GibbsPotential zero(double z) {
        return {[](Point) { return 0.0; }, 0.0, z, 0.0};
    }

    /// Gaussian soft core Ψ(x) = amplitude·e^{−|x|²}.
    static GibbsPotential gaussian_softcore(double amplitude, double beta,
                                            double z, double cutoff = 6.0) {
        return {[amplitude](Point d) { return amplitude * std::exp(-d.norm2()); },
                beta, z, cutoff};
    }

    /// Hard core: +inf inside radius sigma, 0 outside.
    static GibbsPotential hardcore(double sigma, double beta, double z) {
        return {[sigma](Point d) {
                    return d.norm() < sigma
                               ? std::numeric_limits<double>::infinity()
                               : 0.0;
                },
                beta, z, sigma * (1.0 + 1e-12)};
    }
};

namespace detail {

/// Energy of point p against everything in pts except index `skip`.
inline double interaction_energy(const GibbsPotential& pot,
                                 const std::vector<Point>& pts, Point p,
                                 std::size_t skip) {
    double e = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
        if (j == skip) continue;
        e += pot.pair_energy(p, pts[j]);
        if (e == std::numeric_limits<double>::infinity()) return e;
    }
    return e;
}

}  // namespace detail

/**
 * @brief Grand-canonical Metropolis–Hastings sampler for a Ruelle-class
 * Gibbs field on a window.
 *
 * Proposal mix fixed at 40% move / 30% birth / 30% death. Detailed
 * balance with respect to density ∝ z^n e^{−β Σ_{j<k} Ψ(x_j−x_k)}.
 * The chain starts from an exact Poisson(z) draw, so a zero interaction
 * stays exactly Poisson at every step — a useful identity for tests.
 *
 * One "sweep" here is one proposal; n_steps is the total proposal count.
 * Throws MixingFailure if the acceptance rate over the last 10% of
 * sweeps drops below 0.1%.
 */
inline Configuration sample_gibbs(const GibbsPotential& potential,
                                  const Window& window, std::uint64_t n_steps,
                                  std::uint64_t seed) {
    if (!potential.psi) throw std::invalid_argument("sample_gibbs: null psi");
    if (!(potential.activity > 0.0))
        throw std::invalid_argument("sample_gibbs: activity must be > 0");
    rng::PhiloxStream g(seed);
    const double area = window.area();
    const double z = potential.activity;
    const double beta = potential.beta;

    // Initial state: exact Poisson(z).
    std::vector<Point> pts;
    {
        const std::uint64_t count = g.poisson(z * area);
        pts.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            Point p = uniform_in_window(g, window);
            // A hard-core start must itself be feasible; thin collisions.
            if (detail::interaction_energy(potential, pts, p, pts.size()) <
                std::numeric_limits<double>::infinity())
                pts.push_back(p);
        }
    }

    const std::uint64_t tail_start = n_steps - n_steps / 10;
    std::uint64_t tail_proposals = 0, tail_accepts = 0;

    for (std::uint64_t step = 0; step < n_steps; ++step) {
        const bool in_tail = step >= tail_start;
        if (in_tail) ++tail_proposals;
        const double u = g.uniform();
        bool accepted = false;

        if (u < 0.4) {
            // Move: half local Gaussian steps, half window-wide jumps.
            if (!pts.empty()) {
                const std::size_t i = g.below(pts.size());
                Point prop;
                if (g.uniform() < 0.5) {
                    prop = pts[i] + Point{g.normal(), g.normal()};
                    if (!window.contains(prop)) prop = pts[i];  // reject below
                } else {
                    prop = uniform_in_window(g, window);
                }
                if (!(prop == pts[i])) {
                    const double e_old =
                        detail::interaction_energy(potential, pts, pts[i], i);
                    const double e_new =
                        detail::interaction_energy(potential, pts, prop, i);
                    const double log_a = -beta * (e_new - e_old);
                    if (log_a >= 0.0 || g.uniform() < std::exp(log_a)) {
                        pts[i] = prop;
                        accepted = true;
                    }
                }
            }
        } else if (u < 0.7) {
            // Birth at a uniform location. Infinite energy (hard-core
            // overlap) is an unconditional rejection, kept out of the
            // arithmetic so beta = 0 cannot produce 0*inf.
            const Point p = uniform_in_window(g, window);
            const double e =
                detail::interaction_energy(potential, pts, p, pts.size());
            if (e < std::numeric_limits<double>::infinity()) {
                const double log_a =
                    std::log(z * area / static_cast<double>(pts.size() + 1)) -
                    beta * e;
                if (log_a >= 0.0 || g.uniform() < std::exp(log_a)) {
                    pts.push_back(p);
                    accepted = true;
                }
            }
        } else {
            // Death of a uniformly chosen point; removing an
            // infinite-energy point is an unconditional acceptance.
            if (!pts.empty()) {
                const std::size_t i = g.below(pts.size());
                const double e =
                    detail::interaction_energy(potential, pts, pts[i], i);
                const double log_a =
                    e == std::numeric_limits<double>::infinity()
                        ? std::numeric_limits<double>::infinity()
                        : std::log(static_cast<double>(pts.size()) / (z * area)) +
                              beta * e;
                if (log_a >= 0.0 || g.uniform() < std::exp(log_a)) {
                    pts[i] = pts.back();
                    pts.pop_back();
                    accepted = true;
                }
            }
        }
        if (in_tail && accepted) ++tail_accepts;
    }

    if (tail_proposals >= 100 &&
        static_cast<double>(tail_accepts) <
            0.001 * static_cast<double>(tail_proposals))
        throw MixingFailure(
            "sample_gibbs: acceptance rate below 0.1% over the last 10% of "
            "sweeps (" +
            std::to_string(tail_accepts) + "/" + std::to_string(tail_proposals) +
            ")");

    return Configuration(std::move(pts), window, ConfigMeta{"gibbs", seed});
}

}  // namespace loggas
