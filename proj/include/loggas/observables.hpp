/**
 * @brief Statistics over trajectories and configurations: mean-squared
 * displacement and its scaling exponent, diffusively rescaled paths,
 * number/mean functions and number-variance profiles with jackknife
 * errors, the smooth cutoff ξ_L, trial functions with analytic carré du
 * champ, shift derivatives by central differences, and the Monte-Carlo
 * variational upper bound they combine into.
 *
 * Sign convention: trial functions are arranged so that the no-crossing
 * shift derivative in the distinguished coordinate is +1 (the mean-shift
 * statistic is negated internally: f = ξ_L(−M_{R,p}/N_R)). The raw,
 * un-negated windowed mean would give −1: shifting the configuration by
 * ε·e_p moves every point by −ε·e_p, so M_{R,p} drops by ε·N_R.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <loggas/dynamics.hpp>
#include <loggas/errors.hpp>
#include <loggas/geometry.hpp>

namespace loggas {

// ---------------------------------------------------------------------------
// Mean-squared displacement and exponent fits
// ---------------------------------------------------------------------------

/// Ensemble-averaged |X_t − X_0|² of one labeled particle per lag, with
/// per-lag Monte-Carlo standard errors.
struct MSDSeries {
    std::vector<double> lags;
    std::vector<double> values;
    std::vector<double> stderrs;
    std::size_t ensemble = 0;
};

namespace detail {

/// Index of `t` in the (increasing) grid, or throw.
inline std::size_t grid_index(const std::vector<double>& times, double t) {
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - t) <= tol) return k;
    throw std::invalid_argument("msd: lag " + std::to_string(t) +
                                " is not on the trajectory time grid");
}

}  // namespace detail

/**
 * @brief Tagged-particle MSD over an ensemble of trajectories sharing
 * one time grid. values[k] = mean over the ensemble of |X_{t_k} − X_0|²
 * for the tagged label; stderr from the ensemble variance.
 */
inline MSDSeries msd(const std::vector<Trajectory>& ensemble,
                     std::size_t tagged, const std::vector<double>& lags) {
    if (ensemble.empty())
        throw std::invalid_argument("msd: empty ensemble");
    const std::vector<double>& grid = ensemble.front().times;
    for (const Trajectory& traj : ensemble) {
        if (traj.n_particles() <= tagged)
            throw std::invalid_argument("msd: tagged index out of range");
        if (traj.times.size() != grid.size())
            throw std::invalid_argument("msd: inhomogeneous time grids");
        for (std::size_t k = 0; k < grid.size(); ++k)
            if (std::abs(traj.times[k] - grid[k]) >
                1e-9 * std::max(1.0, std::abs(grid[k])))
                throw std::invalid_argument("msd: inhomogeneous time grids");
    }
    MSDSeries out;
    out.ensemble = ensemble.size();
    const double m = static_cast<double>(ensemble.size());
    double prev = -std::numeric_limits<double>::infinity();
    for (double lag : lags) {
        if (lag <= prev)
            throw std::invalid_argument("msd: lags must be increasing");
        prev = lag;
        const std::size_t k = detail::grid_index(grid, lag);
        double s1 = 0.0, s2 = 0.0;
        for (const Trajectory& traj : ensemble) {
            const double d2 =
                (traj.frames[k][tagged] - traj.frames[0][tagged]).norm2();
            s1 += d2;
            s2 += d2 * d2;
        }
        const double mean = s1 / m;
        double se = 0.0;
        if (ensemble.size() > 1) {
            const double var =
                std::max(0.0, (s2 - m * mean * mean) / (m - 1.0));
            se = std::sqrt(var / m);
        }
        out.lags.push_back(lag);
        out.values.push_back(mean);
        out.stderrs.push_back(se);
    }
    return out;
}

/// Log-log least-squares exponent fit with its regression standard
/// error.
struct ExponentFit {
    double alpha = 0.0;
    double stderr_ = 0.0;
    std::size_t n_lags = 0;
};

/**
 * @brief OLS slope of log(msd) against log(lag) over lags in
 * [t_min, t_max]. Requires at least 5 lags in the window, all with
 * positive lag and value.
 */
inline ExponentFit scaling_exponent(const MSDSeries& series, double t_min,
                                    double t_max) {
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < series.lags.size(); ++k) {
        const double t = series.lags[k];
        if (t < t_min || t > t_max) continue;
        if (!(t > 0.0))
            throw std::invalid_argument(
                "scaling_exponent: lag must be > 0 inside the fit window");
        if (!(series.values[k] > 0.0))
            throw std::invalid_argument(
                "scaling_exponent: msd value <= 0 inside the fit window");
        lx.push_back(std::log(t));
        ly.push_back(std::log(series.values[k]));
    }
    const std::size_t n = lx.size();
    if (n < 5)
        throw std::invalid_argument(
            "scaling_exponent: need at least 5 lags inside the fit window");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("scaling_exponent: degenerate lag window");
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - my - slope * (lx[i] - mx);
        rss += r * r;
    }
    ExponentFit fit;
    fit.alpha = slope;
    fit.n_lags = n;
    if (n > 2) fit.stderr_ = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    return fit;
}

// ---------------------------------------------------------------------------
// Diffusive rescaling
// ---------------------------------------------------------------------------

/// The path t ↦ ε·X_{t/ε²} on the rescaled grid, with its sup norm.
struct RescaledPath {
    std::vector<double> times;
    std::vector<Point> points;
    double sup_norm = 0.0;
};

/**
 * @brief Diffusive rescaling of one labeled path: sample ε·X_{t/ε²} at
 * the rescaled frame times ε²·t_k ≤ t_max (nearest-frame lookup is the
 * grid itself). Errors if the horizon T < t_max/ε².
 */
inline RescaledPath rescaled_path(const Trajectory& traj, std::size_t tagged,
                                  double eps, double t_max) {
    if (!(eps > 0.0))
        throw std::invalid_argument("rescaled_path: eps must be > 0");
    if (!(t_max >= 0.0))
        throw std::invalid_argument("rescaled_path: t_max must be >= 0");
    if (traj.n_particles() <= tagged)
        throw std::invalid_argument("rescaled_path: tagged index out of range");
    const double horizon = traj.times.back();
    if (t_max / (eps * eps) > horizon * (1.0 + 1e-12))
        throw std::invalid_argument(
            "rescaled_path: horizon insufficient, need T >= t_max/eps^2");
    RescaledPath out;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double t = eps * eps * traj.times[k];
        if (t > t_max * (1.0 + 1e-12)) break;
        const Point x = traj.frames[k][tagged];
        const Point y{eps * x.re, eps * x.im};
        out.times.push_back(t);
        out.points.push_back(y);
        out.sup_norm = std::max(out.sup_norm, y.norm());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Number and mean functions, variance profiles
// ---------------------------------------------------------------------------

/// N_R = #{|s_i| < R} and M_R = Σ_{|s_i| < R} s_i.
struct NumberMean {
    std::int64_t count = 0;
    Point vector_sum{0.0, 0.0};
};

inline NumberMean number_mean_functions(const Configuration& config,
                                        double R) {
    if (!(R > 0.0))
        throw std::invalid_argument("number_mean_functions: R must be > 0");
    NumberMean out;
    for (const Point& s : config.points()) {
        if (s.norm2() < R * R) {
            ++out.count;
            out.vector_sum.re += s.re;
            out.vector_sum.im += s.im;
        }
    }
    return out;
}

/// Per-radius empirical mean and variance of N_R with jackknife
/// standard errors (leave-one-out for the variance; for the mean the
/// jackknife reproduces the classic s/√M exactly).
struct VarianceProfile {
    std::vector<double> radii;
    std::vector<double> mean;
    std::vector<double> variance;
    std::vector<double> mean_se;
    std::vector<double> variance_se;
    std::size_t ensemble = 0;
};

inline VarianceProfile number_variance_profile(
    const std::vector<Configuration>& ensemble,
    const std::vector<double>& radii) {
    const std::size_t m = ensemble.size();
    if (m < 3)
        throw std::invalid_argument(
            "number_variance_profile: need at least 3 samples for jackknife "
            "errors");
    VarianceProfile out;
    out.ensemble = m;
    const double dm = static_cast<double>(m);
    for (double R : radii) {
        std::vector<double> n(m);
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            n[i] = static_cast<double>(
                number_mean_functions(ensemble[i], R).count);
            s1 += n[i];
            s2 += n[i] * n[i];
        }
        const double mean = s1 / dm;
        const double var = std::max(0.0, (s2 - dm * mean * mean) / (dm - 1.0));
        // Leave-one-out variance estimates.
        std::vector<double> loo(m);
        double loo_sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double m_i = (s1 - n[i]) / (dm - 1.0);
            const double v_i = std::max(
                0.0, (s2 - n[i] * n[i] - (dm - 1.0) * m_i * m_i) / (dm - 2.0));
            loo[i] = v_i;
            loo_sum += v_i;
        }
        const double loo_mean = loo_sum / dm;
        double jk = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            jk += (loo[i] - loo_mean) * (loo[i] - loo_mean);
        out.radii.push_back(R);
        out.mean.push_back(mean);
        out.variance.push_back(var);
        out.mean_se.push_back(std::sqrt(var / dm));
        out.variance_se.push_back(std::sqrt((dm - 1.0) / dm * jk));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Smooth cutoff ξ_L
// ---------------------------------------------------------------------------

namespace detail {

/// Transition profile on [0, 1]: g(0)=0, g(1)=1, g′(0)=2, g′(1)=0,
/// g″(0)=g″(1)=0 — so ξ(L+2u) = L+g(u) is C² at both junctions and
/// g′(u) = (1−u)²(2+4u) ≥ 0 keeps ξ monotone with slope ≤ 1.
inline double xi_blend(double u) {
    return u * (2.0 + u * u * (-2.0 + u));
}
inline double xi_blend_prime(double u) {
    const double w = 1.0 - u;
    return w * w * (2.0 + 4.0 * u);
}

}  // namespace detail

/**
 * @brief Smooth non-decreasing cutoff: ξ_L(t) = t on |t| ≤ L, constant
 * ±(L+1) beyond |t| ≥ L+2, C² Hermite-quintic blend on the transition
 * bands, odd, with 0 ≤ ξ_L′ ≤ 1 (inside the contract bound of 2).
 */
inline double cutoff_xi(int L, double t) {
    if (L < 1) throw std::invalid_argument("cutoff_xi: L must be >= 1");
    const double a = std::abs(t);
    const double dl = static_cast<double>(L);
    double v;
    if (a <= dl)
        v = a;
    else if (a >= dl + 2.0)
        v = dl + 1.0;
    else
        v = dl + detail::xi_blend(0.5 * (a - dl));
    return std::copysign(v, t);
}

/// Analytic ξ_L′ (needed by the carré du champ of mean-shift trials).
inline double cutoff_xi_prime(int L, double t) {
    if (L < 1) throw std::invalid_argument("cutoff_xi: L must be >= 1");
    const double a = std::abs(t);
    const double dl = static_cast<double>(L);
    if (a <= dl) return 1.0;
    if (a >= dl + 2.0) return 0.0;
    return 0.5 * detail::xi_blend_prime(0.5 * (a - dl));
}

// ---------------------------------------------------------------------------
// Trial functions
// ---------------------------------------------------------------------------

/**
 * @brief A trial function over configurations: either a linear
 * statistic Σ_i φ(s_i) with its analytic gradient, or the cutoff
 * windowed mean ξ_L(−M_{R,p}/N_R) (negated, see file header).
 *
 * mean_shift is undefined on configurations with N_R = 0 (evaluation
 * throws); the variational bound skips and counts such samples.
 */
struct TrialFunction {
    enum class Kind { linear_statistic, mean_shift };

    Kind kind = Kind::linear_statistic;
    std::function<double(Point)> phi;       ///< linear_statistic; null ⇒ 0
    std::function<Point(Point)> grad_phi;   ///< analytic ∇φ; null ⇒ (0,0)
    double R = 1.0;                         ///< mean_shift window radius
    int p = 0;                              ///< mean_shift coordinate
    int L = 1;                              ///< mean_shift cutoff level

    static TrialFunction linear(std::function<double(Point)> f,
                                std::function<Point(Point)> grad) {
        TrialFunction t;
        t.kind = Kind::linear_statistic;
        t.phi = std::move(f);
        t.grad_phi = std::move(grad);
        return t;
    }

    /// The identically-zero trial function.
    static TrialFunction zero() { return {}; }

    static TrialFunction mean_shift(double R, int p, int L) {
        if (!(R > 0.0))
            throw std::invalid_argument("mean_shift: R must be > 0");
        if (p != 0 && p != 1)
            throw std::invalid_argument("mean_shift: p must be 0 or 1");
        if (L < 1) throw std::invalid_argument("mean_shift: L must be >= 1");
        TrialFunction t;
        t.kind = Kind::mean_shift;
        t.R = R;
        t.p = p;
        t.L = L;
        return t;
    }

    [[nodiscard]] double operator()(const Configuration& config) const {
        if (kind == Kind::linear_statistic) {
            if (!phi) return 0.0;
            double acc = 0.0;
            for (const Point& s : config.points()) acc += phi(s);
            return acc;
        }
        const NumberMean nm = number_mean_functions(config, R);
        if (nm.count == 0)
            throw std::invalid_argument(
                "mean_shift: undefined on configurations with N_R = 0");
        const double coord = p == 0 ? nm.vector_sum.re : nm.vector_sum.im;
        return cutoff_xi(L, -coord / static_cast<double>(nm.count));
    }
};

// ---------------------------------------------------------------------------
// Carré du champ and shift derivatives
// ---------------------------------------------------------------------------

/**
 * @brief ½ Σ_i |∇_{s_i} f|², analytic per kind.
 *
 * linear_statistic: ½ Σ_i |∇φ(s_i)|². mean_shift: interior points each
 * contribute the gradient ±e_p·ξ_L′(−M/N)/N_R, so the total is
 * ξ_L′(−M_{R,p}/N_R)²/(2·N_R); errors if any point lies within 1e-9 of
 * the window boundary |s_i| = R, where the gradient is undefined.
 */
inline double carre_du_champ(const TrialFunction& f,
                             const Configuration& config) {
    if (f.kind == TrialFunction::Kind::linear_statistic) {
        if (!f.grad_phi) return 0.0;
        double acc = 0.0;
        for (const Point& s : config.points()) {
            const Point g = f.grad_phi(s);
            acc += g.norm2();
        }
        return 0.5 * acc;
    }
    for (const Point& s : config.points())
        if (std::abs(s.norm() - f.R) < 1e-9)
            throw NumericError(
                "carre_du_champ: point within 1e-9 of the mean-shift window "
                "boundary; gradient undefined");
    const NumberMean nm = number_mean_functions(config, f.R);
    if (nm.count == 0)
        throw std::invalid_argument(
            "carre_du_champ: mean_shift undefined on N_R = 0");
    const double coord =
        f.p == 0 ? nm.vector_sum.re : nm.vector_sum.im;
    const double xp =
        cutoff_xi_prime(f.L, -coord / static_cast<double>(nm.count));
    return xp * xp / (2.0 * static_cast<double>(nm.count));
}

/// Central-difference shift derivative plus the boundary-crossing flag
/// (mean_shift only: the membership set {|s_i| < R} changed between the
/// two evaluations).
struct ShiftDerivative {
    double value = 0.0;
    bool boundary_crossed = false;
};

/**
 * @brief (f(θ_{ε e_p} config) − f(θ_{−ε e_p} config)) / (2ε) using the
 * configuration shift (points move by −ε e_p under θ_{ε e_p}).
 */
inline ShiftDerivative shift_derivative_fd(const TrialFunction& f,
                                           const Configuration& config,
                                           int p, double eps) {
    if (p != 0 && p != 1)
        throw std::invalid_argument("shift_derivative_fd: p must be 0 or 1");
    if (!(eps > 0.0))
        throw std::invalid_argument("shift_derivative_fd: eps must be > 0");
    const Point e = p == 0 ? Point{eps, 0.0} : Point{0.0, eps};
    const Configuration plus = shift(config, e);
    const Configuration minus = shift(config, -e);
    ShiftDerivative out;
    if (f.kind == TrialFunction::Kind::mean_shift) {
        const double r2 = f.R * f.R;
        for (std::size_t i = 0; i < config.points().size(); ++i) {
            const bool in_plus = plus.points()[i].norm2() < r2;
            const bool in_minus = minus.points()[i].norm2() < r2;
            if (in_plus != in_minus) {
                out.boundary_crossed = true;
                break;
            }
        }
    }
    out.value = (f(plus) - f(minus)) / (2.0 * eps);
    return out;
}

// ---------------------------------------------------------------------------
// Variational upper bound
// ---------------------------------------------------------------------------

/**
 * @brief Monte-Carlo estimate of the variational functional
 * ∫ ½ Σ_q |D^sft_q f − δ_pq|² + 𝔻[f, f] with the two terms reported
 * separately. Samples where mean_shift is undefined (N_R = 0) are
 * skipped and counted; boundary-crossing-flagged samples stay in the
 * estimate but are counted. The trial ≡ 0 scores exactly ½.
 */
struct VariationalBound {
    double estimate = 0.0;
    double stderr_ = 0.0;
    double shift_term = 0.0;   ///< mean of ½ Σ_q |D_q f − δ_pq|²
    double carre_term = 0.0;   ///< mean of 𝔻[f, f]
    double skipped_fraction = 0.0;
    double flagged_fraction = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0;
    std::size_t flagged = 0;
};

inline VariationalBound variational_bound(
    const TrialFunction& trial, int p,
    const std::vector<Configuration>& samples, double eps) {
    if (samples.empty())
        throw std::invalid_argument("variational_bound: empty ensemble");
    if (p != 0 && p != 1)
        throw std::invalid_argument("variational_bound: p must be 0 or 1");
    if (!(eps > 0.0))
        throw std::invalid_argument("variational_bound: eps must be > 0");
    VariationalBound out;
    std::vector<double> totals;
    double shift_acc = 0.0, carre_acc = 0.0;
    for (const Configuration& config : samples) {
        if (trial.kind == TrialFunction::Kind::mean_shift &&
            number_mean_functions(config, trial.R).count == 0) {
            ++out.skipped;
            continue;
        }
        double shift_part = 0.0;
        bool flagged = false;
        double carre_part;
        try {
            for (int q = 0; q < 2; ++q) {
                const ShiftDerivative d =
                    shift_derivative_fd(trial, config, q, eps);
                flagged = flagged || d.boundary_crossed;
                const double delta = q == p ? 1.0 : 0.0;
                shift_part += 0.5 * (d.value - delta) * (d.value - delta);
            }
            carre_part = carre_du_champ(trial, config);
        } catch (const std::invalid_argument&) {
            // A shifted evaluation lost its last interior point.
            ++out.skipped;
            continue;
        } catch (const NumericError&) {
            // Boundary-degenerate carré du champ: unusable sample.
            ++out.skipped;
            continue;
        }
        if (flagged) ++out.flagged;
        shift_acc += shift_part;
        carre_acc += carre_part;
        totals.push_back(shift_part + carre_part);
    }
    out.used = totals.size();
    const double total = static_cast<double>(samples.size());
    out.skipped_fraction = static_cast<double>(out.skipped) / total;
    out.flagged_fraction = static_cast<double>(out.flagged) / total;
    if (static_cast<double>(out.skipped + out.flagged) > 0.5 * total)
        throw NumericError(
            "variational_bound: more than half of the samples skipped or "
            "boundary-flagged; estimate meaningless");
    if (out.used == 0)
        throw NumericError("variational_bound: no usable samples");
    const double n = static_cast<double>(out.used);
    out.shift_term = shift_acc / n;
    out.carre_term = carre_acc / n;
    double s1 = 0.0;
    for (double v : totals) s1 += v;
    out.estimate = s1 / n;
    if (out.used > 1) {
        double rss = 0.0;
        for (double v : totals)
            rss += (v - out.estimate) * (v - out.estimate);
        out.stderr_ = std::sqrt(rss / (n - 1.0) / n);
    }
    return out;
}

}  // namespace loggas
