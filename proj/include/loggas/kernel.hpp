/**
 * @brief Exact evaluators for the Ginibre determinantal kernel.
 *
 * K(x, y) = π⁻¹ exp(−|x|²/2 − |y|²/2 + x·conj(y))   (infinite volume)
 * K_N     = π⁻¹ exp(−(|x|²+|y|²)/2) Σ_{k<N} (x·conj(y))^k / k!
 *
 * and n-point correlation functions ρⁿ(x_1..x_n) = det[K(x_i, x_j)].
 * Everything is computed through combined exponents (never the raw
 * exponentials), so evaluations stay overflow-safe arbitrarily far from
 * the origin.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <loggas/geometry.hpp>
#include <loggas/linalg.hpp>

namespace loggas {

/// Which kernel: the infinite-volume exponential kernel, or its
/// finite-N truncation (the N-eigenvalue ensemble's kernel).
struct KernelSpec {
    enum class Kind { ginibre_infinite, ginibre_finite };

    Kind kind = Kind::ginibre_infinite;
    int N = 0;  ///< truncation order; meaningful for ginibre_finite only

    static KernelSpec infinite() { return {Kind::ginibre_infinite, 0}; }
    static KernelSpec finite(int N) {
        if (N < 1) throw std::invalid_argument("KernelSpec: N must be >= 1");
        return {Kind::ginibre_finite, N};
    }
};

namespace detail {

/// π·K for the infinite kernel: exp of the combined complex exponent.
/// The real part is algebraically −|x−y|²/2 and is computed in that
/// form — the naive x·conj(y) − |x|²/2 − |y|²/2 cancels catastrophically
/// far from the origin (one ulp of |x|² dominates the result). The
/// imaginary part keeps its two products in separate statements so FMA
/// contraction cannot leave a phase residue on the diagonal.
inline std::complex<double> scaled_kernel_infinite(Point x, Point y) {
    if (x.re == y.re && x.im == y.im) return {1.0, 0.0};
    const double re = -0.5 * (x - y).norm2();
    const double im = x.im * y.re - x.re * y.im;  // Im(x·conj(y))
    return std::exp(std::complex<double>(re, im));
}

/**
 * @brief π·K_N via a log-space partial exponential sum.
 *
 * Term k has log-magnitude m_k = k·log|w| − log k! − (|x|²+|y|²)/2 with
 * w = x·conj(y). Terms are rescaled by max_k m_k before summation, so
 * neither w^k nor k! is ever formed directly (w^k alone overflows for
 * bulk points at N ≳ 600).
 */
inline std::complex<double> scaled_kernel_finite(int N, Point x, Point y) {
    const std::complex<double> w = x.cplx() * std::conj(y.cplx());
    const double base = -0.5 * (x.norm2() + y.norm2());
    const double wabs = std::abs(w);
    if (wabs == 0.0) return {std::exp(base), 0.0};  // only the k=0 term

    const double logw = std::log(wabs);
    const double theta = std::arg(w);
    std::vector<double> logmag(static_cast<std::size_t>(N));
    double m = base;    // running k·log|w| − log k! + base
    double mmax = m;
    for (int k = 0; k < N; ++k) {
        logmag[static_cast<std::size_t>(k)] = m;
        if (m > mmax) mmax = m;
        m += logw - std::log(static_cast<double>(k + 1));
    }
    std::complex<double> sum{0.0, 0.0};
    for (int k = 0; k < N; ++k)
        sum += std::polar(std::exp(logmag[static_cast<std::size_t>(k)] - mmax),
                          static_cast<double>(k) * theta);
    return std::exp(mmax) * sum;
}

}  // namespace detail

/// Evaluate K(x, y). Hermitian: K(x,y) = conj(K(y,x)).
inline std::complex<double> kernel_eval(const KernelSpec& spec, Point x, Point y) {
    const std::complex<double> scaled =
        spec.kind == KernelSpec::Kind::ginibre_infinite
            ? detail::scaled_kernel_infinite(x, y)
            : detail::scaled_kernel_finite(spec.N, x, y);
    return scaled / std::numbers::pi;
}

/// Roundoff bookkeeping for correlation(): callers that care pass one in.
struct CorrelationDiag {
    std::uint64_t clamped_negative = 0;  ///< tiny negative dets clamped to 0
    double max_imag_residue = 0.0;       ///< worst relative imaginary part seen
};

/**
 * @brief n-point correlation ρⁿ = det[K(x_i, x_j)].
 *
 * The determinant of a Hermitian PSD matrix is real and ≥ 0; roundoff on
 * near-singular inputs can leave a tiny negative value or imaginary
 * residue, which are clamped/recorded rather than propagated. Degenerate
 * inputs (duplicate points) are a valid 0, not an error.
 */
inline double correlation(const KernelSpec& spec, const std::vector<Point>& points,
                          CorrelationDiag* diag = nullptr) {
    const std::size_t n = points.size();
    if (n == 0)
        throw std::invalid_argument("correlation: need at least one point");
    std::vector<std::complex<double>> k(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            k[i * n + j] = kernel_eval(spec, points[i], points[j]);
    const linalg::LogDet ld = linalg::logdet_inplace(k, n);
    if (ld.singular) return 0.0;
    const std::complex<double> det = ld.value();
    if (!std::isfinite(det.real()))
        throw std::runtime_error("correlation: determinant overflow");
    const double scale = std::abs(det);
    if (scale > 0.0 && diag) {
        const double rel_imag = std::abs(det.imag()) / scale;
        if (rel_imag > diag->max_imag_residue) diag->max_imag_residue = rel_imag;
    }
    double value = det.real();
    if (value < 0.0) {
        if (diag) ++diag->clamped_negative;
        value = 0.0;
    }
    return value;
}

}  // namespace loggas
