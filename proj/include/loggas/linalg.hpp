/**
 * @brief Small dense complex linear algebra: determinants in log space.
 *
 * Kernel-correlation and Palm evaluations need determinants whose
 * magnitude under- or overflows double range long before the arithmetic
 * itself degrades (|Δ(x)|² underflows already at m ≈ 6 for close points).
 * All determinants are therefore carried as (log|det|, phase).
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace loggas::linalg {

using cdouble = std::complex<double>;

/// Determinant in polar log form: det = exp(log_abs) * phase, |phase| = 1.
/// A singular matrix reports log_abs = -inf and phase = 0.
struct LogDet {
    double log_abs = -std::numeric_limits<double>::infinity();
    cdouble phase{0.0, 0.0};
    bool singular = false;

    /// The determinant as a plain complex number (may under/overflow).
    [[nodiscard]] cdouble value() const {
        if (singular) return {0.0, 0.0};
        return std::exp(log_abs) * phase;
    }
};

/**
 * @brief LU factorization with partial pivoting, determinant only.
 *
 * @param a  row-major n×n complex matrix, destroyed in place.
 */
inline LogDet logdet_inplace(std::vector<cdouble>& a, std::size_t n) {
    if (a.size() != n * n)
        throw std::invalid_argument("logdet_inplace: size mismatch");
    LogDet out;
    out.log_abs = 0.0;
    out.phase = {1.0, 0.0};
    for (std::size_t col = 0; col < n; ++col) {
        // Pivot: largest magnitude on or below the diagonal.
        std::size_t piv = col;
        double best = std::abs(a[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double mag = std::abs(a[r * n + col]);
            if (mag > best) {
                best = mag;
                piv = r;
            }
        }
        if (best == 0.0) {
            out.singular = true;
            out.log_abs = -std::numeric_limits<double>::infinity();
            out.phase = {0.0, 0.0};
            return out;
        }
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c)
                std::swap(a[piv * n + c], a[col * n + c]);
            out.phase = -out.phase;  // row swap flips the sign
        }
        const cdouble pivot = a[col * n + col];
        out.log_abs += std::log(std::abs(pivot));
        out.phase *= pivot / std::abs(pivot);
        for (std::size_t r = col + 1; r < n; ++r) {
            const cdouble f = a[r * n + col] / pivot;
            a[r * n + col] = f;
            for (std::size_t c = col + 1; c < n; ++c)
                a[r * n + c] -= f * a[col * n + c];
        }
    }
    return out;
}

inline LogDet logdet(std::vector<cdouble> a, std::size_t n) {
    return logdet_inplace(a, n);
}

}  // namespace loggas::linalg
