/**
 * @brief Finite-N Euler–Maruyama integration of interacting Brownian
 * particles in the plane.
 *
 * Drift families:
 *   - coulomb_confined: b_i = −c·x_i + Σ_{j≠i} (x_i−x_j)/|x_i−x_j|²
 *     (log-gas at β = 2; with c = 1 the invariant law is exactly the
 *     finite-N Ginibre eigenvalue ensemble, since the drift is −½∇Φ for
 *     Φ = Σ|z_i|² − 2Σ_{i<j} log|z_i−z_j|);
 *   - free: b ≡ 0 (independent planar Brownian motions);
 *   - gibbs_gradient: b_i = −(β/2) Σ_{j≠i} ∇Ψ(x_i−x_j) for a smooth
 *     pair potential Ψ, so the matching Gibbs measure is invariant.
 *
 * The integrator is plain Euler–Maruyama with a per-particle drift cap
 * of 1/√dt (capped events are counted, never silent) and counter-based
 * Gaussian increments keyed by (seed, step, particle), which makes every
 * trajectory a pure function of (initial configuration, parameters,
 * seed) regardless of thread scheduling.
 */
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <loggas/errors.hpp>
#include <loggas/geometry.hpp>
#include <loggas/rng.hpp>

namespace loggas {

/// Pair separations below this are treated as an integrator failure.
inline constexpr double kCollisionDistance = 1e-12;

/**
 * @brief Drift-field description for the integrator.
 *
 * truncation_radius limits pair interactions to |x_i − x_j| < r
 * (strict); +infinity means "all pairs". confinement_strength c adds
 * −c·x_i for any kind. gibbs_gradient evaluates the built-in Gaussian
 * soft-core force analytically unless a custom pair_force is installed.
 */
struct DriftSpec {
    enum class Kind { coulomb_confined, free, gibbs_gradient };

    Kind kind = Kind::free;
    double truncation_radius = std::numeric_limits<double>::infinity();
    double confinement_strength = 0.0;

    /// Gaussian soft-core parameters (gibbs_gradient): Ψ = A·e^{−|z|²},
    /// force on i from j at separation d = x_i − x_j is β·A·d·e^{−|d|²}.
    double gibbs_amplitude = 1.0;
    double gibbs_beta = 1.0;

    /// Optional override: full drift contribution of one neighbor at
    /// separation d (already including the −β/2 factor). When set, it
    /// replaces the built-in soft-core force under kind gibbs_gradient.
    std::function<Point(Point)> pair_force;

    static DriftSpec coulomb_confined(
        double c = 1.0,
        double truncation = std::numeric_limits<double>::infinity()) {
        if (c < 0.0)
            throw std::invalid_argument(
                "DriftSpec: confinement_strength must be >= 0");
        if (!(truncation > 0.0))
            throw std::invalid_argument(
                "DriftSpec: truncation_radius must be > 0");
        DriftSpec s;
        s.kind = Kind::coulomb_confined;
        s.confinement_strength = c;
        s.truncation_radius = truncation;
        return s;
    }

    static DriftSpec free_motion() { return {}; }

    static DriftSpec gibbs_gaussian_softcore(double amplitude, double beta,
                                             double truncation = 4.0) {
        if (beta < 0.0)
            throw std::invalid_argument("DriftSpec: beta must be >= 0");
        if (!(truncation > 0.0))
            throw std::invalid_argument(
                "DriftSpec: truncation_radius must be > 0");
        DriftSpec s;
        s.kind = Kind::gibbs_gradient;
        s.truncation_radius = truncation;
        s.gibbs_amplitude = amplitude;
        s.gibbs_beta = beta;
        return s;
    }

    [[nodiscard]] const char* kind_name() const {
        switch (kind) {
            case Kind::coulomb_confined: return "coulomb_confined";
            case Kind::free: return "free";
            case Kind::gibbs_gradient: return "gibbs_gradient";
        }
        return "?";
    }
};

/// One instant of the integrated system. The RNG cursor is implicit:
/// Gaussian increments are keyed by (seed, step_count, particle), so
/// (seed, step_count) fully determines the next draw.
struct SDEState {
    std::vector<Point> positions;
    double time = 0.0;
    std::uint64_t step_count = 0;
    std::uint64_t seed = 0;
};

/**
 * @brief A thinned, labeled path of the whole system.
 *
 * frames[k][i] is particle i (identity fixed at t = 0) at times[k].
 * Integration metadata travels with the path so manifests can be
 * written without re-deriving anything: capped_steps counts per-particle
 * drift-cap events, min_pair_distance is the smallest separation seen at
 * drift evaluations (interacting kinds) and at stored frames, aborted
 * flags a collision abort with the partial path retained.
 */
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<Point>> frames;
    std::string scheme = "euler_maruyama";
    double dt = 0.0;
    std::uint64_t thin = 1;
    std::string drift_kind = "free";
    double truncation_radius = std::numeric_limits<double>::infinity();
    double confinement_strength = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t capped_steps = 0;
    double min_pair_distance = std::numeric_limits<double>::infinity();
    bool aborted = false;
    std::string abort_reason;
    double wall_seconds = 0.0;

    [[nodiscard]] std::size_t n_particles() const {
        return frames.empty() ? 0 : frames.front().size();
    }
};

namespace detail {

/// Pair-interaction part of the drift on particle i (ascending-j order,
/// deterministic), tracking the smallest squared separation seen.
/// Throws CollisionError below kCollisionDistance.
inline Point pair_drift(const DriftSpec& spec, const std::vector<Point>& x,
                        std::size_t i, double* min_d2) {
    const std::size_t n = x.size();
    const double r = spec.truncation_radius;
    const bool all = !std::isfinite(r);
    const double r2 = all ? 0.0 : r * r;
    const Point xi = x[i];
    double bx = 0.0, by = 0.0;
    double local_min = std::numeric_limits<double>::infinity();

    if (spec.kind == DriftSpec::Kind::coulomb_confined) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dx = xi.re - x[j].re;
            const double dy = xi.im - x[j].im;
            const double d2 = dx * dx + dy * dy;
            if (d2 < local_min) local_min = d2;
            if (d2 < kCollisionDistance * kCollisionDistance)
                throw CollisionError(
                    "coulomb_drift: pair separation below 1e-12 (particles " +
                    std::to_string(i) + ", " + std::to_string(j) + ")");
            if (all || d2 < r2) {
                const double inv = 1.0 / d2;
                bx += dx * inv;
                by += dy * inv;
            }
        }
    } else if (spec.kind == DriftSpec::Kind::gibbs_gradient) {
        if (spec.pair_force) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const Point d = xi - x[j];
                const double d2 = d.norm2();
                if (d2 < local_min) local_min = d2;
                if (all || d2 < r2) {
                    const Point f = spec.pair_force(d);
                    bx += f.re;
                    by += f.im;
                }
            }
        } else {
            const double coeff = spec.gibbs_beta * spec.gibbs_amplitude;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double dx = xi.re - x[j].re;
                const double dy = xi.im - x[j].im;
                const double d2 = dx * dx + dy * dy;
                if (d2 < local_min) local_min = d2;
                if (all || d2 < r2) {
                    const double w = coeff * std::exp(-d2);
                    bx += dx * w;
                    by += dy * w;
                }
            }
        }
    }
    if (min_d2 != nullptr && local_min < *min_d2) *min_d2 = local_min;
    return {bx, by};
}

/// Smallest pair separation of a frame (O(n²); used where no force loop
/// already visits the pairs, i.e. free dynamics at stored frames).
inline double min_pair_distance_of(const std::vector<Point>& x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double d2 = (x[i] - x[j]).norm2();
            if (d2 < best) best = d2;
        }
    return std::sqrt(best);
}

}  // namespace detail

/**
 * @brief Pair-interaction drift on particle i under the log potential:
 * Σ_{j≠i, |x_i−x_j| < r} (x_i−x_j)/|x_i−x_j|².
 *
 * Coefficient 1 (β = 2 with Ψ = −log|x|). Confinement is not included
 * here; the integrator adds −c·x_i separately.
 */
inline Point coulomb_drift(const std::vector<Point>& positions, std::size_t i,
                           double truncation_radius =
                               std::numeric_limits<double>::infinity()) {
    if (i >= positions.size())
        throw std::invalid_argument("coulomb_drift: index out of range");
    if (!(truncation_radius > 0.0))
        throw std::invalid_argument(
            "coulomb_drift: truncation_radius must be > 0");
    DriftSpec spec;
    spec.kind = DriftSpec::Kind::coulomb_confined;
    spec.truncation_radius = truncation_radius;
    return detail::pair_drift(spec, positions, i, nullptr);
}

/**
 * @brief One Euler–Maruyama step: X ← X + b(X)·dt + √dt·ξ.
 *
 * ξ are i.i.d. standard 2-d Gaussians from the counter-based generator
 * keyed by (seed, step_count, particle), so the result is independent of
 * evaluation order. Per-particle drift vectors longer than 1/√dt are
 * rescaled to that length; each such event increments *capped. The
 * smallest pair separation seen by the force loop is folded into
 * *min_d2 (interacting kinds only).
 */
inline SDEState em_step(const SDEState& state, const DriftSpec& spec, double dt,
                        std::uint64_t* capped = nullptr,
                        double* min_d2 = nullptr) {
    if (!(dt > 0.0)) throw std::invalid_argument("em_step: dt must be > 0");
    const std::size_t n = state.positions.size();
    const double cap = 1.0 / std::sqrt(dt);
    const double c = spec.confinement_strength;
    const double sqrt_dt = std::sqrt(dt);

    SDEState next;
    next.positions.resize(n);
    next.time = state.time + dt;
    next.step_count = state.step_count + 1;
    next.seed = state.seed;

    for (std::size_t i = 0; i < n; ++i) {
        Point b{0.0, 0.0};
        if (spec.kind != DriftSpec::Kind::free)
            b = detail::pair_drift(spec, state.positions, i, min_d2);
        b.re -= c * state.positions[i].re;
        b.im -= c * state.positions[i].im;
        const double mag = b.norm();
        if (mag > cap) {
            const double scale = cap / mag;
            b.re *= scale;
            b.im *= scale;
            if (capped != nullptr) ++(*capped);
        }
        const auto g = rng::normal_pair(state.seed, state.step_count, i);
        next.positions[i] = {
            state.positions[i].re + b.re * dt + sqrt_dt * g[0],
            state.positions[i].im + b.im * dt + sqrt_dt * g[1]};
    }
    return next;
}

/**
 * @brief Integrate from config0 to time T, storing every thin-th frame.
 *
 * Particle identities are fixed by label_radial(config0) at t = 0 and
 * positions are unconstrained afterwards (no window clipping). Frames
 * sit at times {0, thin·dt, 2·thin·dt, …} up to n_steps = round(T/dt)
 * steps. A collision does not throw: the partial trajectory is returned
 * with aborted set and the reason recorded, so callers can persist it.
 */
inline Trajectory simulate(const Configuration& config0, const DriftSpec& spec,
                           double T, double dt, std::uint64_t thin,
                           std::uint64_t seed) {
    if (!(T > 0.0)) throw std::invalid_argument("simulate: T must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be > 0");
    if (thin < 1) throw std::invalid_argument("simulate: thin must be >= 1");
    const auto n_steps = static_cast<std::uint64_t>(std::llround(T / dt));
    if (n_steps < 1)
        throw std::invalid_argument("simulate: T/dt rounds to zero steps");

    const auto t_start = std::chrono::steady_clock::now();
    Trajectory traj;
    traj.dt = dt;
    traj.thin = thin;
    traj.drift_kind = spec.kind_name();
    traj.truncation_radius = spec.truncation_radius;
    traj.confinement_strength = spec.confinement_strength;
    traj.seed = seed;

    SDEState state;
    state.positions = label_radial(config0);
    state.seed = seed;

    const bool track_at_frames = spec.kind == DriftSpec::Kind::free;
    auto store = [&](const SDEState& s) {
        traj.times.push_back(static_cast<double>(s.step_count) * dt);
        traj.frames.push_back(s.positions);
        if (track_at_frames && s.positions.size() > 1) {
            const double d = detail::min_pair_distance_of(s.positions);
            if (d < traj.min_pair_distance) traj.min_pair_distance = d;
        }
    };
    store(state);

    double min_d2 = std::numeric_limits<double>::infinity();
    try {
        for (std::uint64_t step = 1; step <= n_steps; ++step) {
            state = em_step(state, spec, dt, &traj.capped_steps, &min_d2);
            if (step % thin == 0) store(state);
        }
    } catch (const CollisionError& e) {
        traj.aborted = true;
        traj.abort_reason = e.what();
    }
    if (min_d2 < std::numeric_limits<double>::infinity()) {
        const double d = std::sqrt(min_d2);
        if (d < traj.min_pair_distance) traj.min_pair_distance = d;
    }
    traj.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
    return traj;
}

/**
 * @brief Tagged-frame coordinates: particle 0 of the result is the
 * tagged path X^tagged itself; particle k ≥ 1 is Y^k = X^{σ(k)} −
 * X^tagged, where σ enumerates the non-tagged indices in ascending
 * order. The change is invertible: X^{σ(k)} = Y^k + X^tagged.
 */
inline Trajectory environment_paths(const Trajectory& traj,
                                    std::size_t tagged) {
    const std::size_t n = traj.n_particles();
    if (n < 2)
        throw std::invalid_argument(
            "environment_paths: need at least 2 particles");
    if (tagged >= n)
        throw std::invalid_argument(
            "environment_paths: tagged index out of range");
    Trajectory out = traj;
    for (std::size_t k = 0; k < traj.frames.size(); ++k) {
        const auto& frame = traj.frames[k];
        auto& dst = out.frames[k];
        const Point xt = frame[tagged];
        dst[0] = xt;
        std::size_t w = 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == tagged) continue;
            dst[w++] = frame[i] - xt;
        }
    }
    return out;
}

}  // namespace loggas
