/**
 * @brief Core geometric types and configuration-space primitives.
 *
 * Points in the plane (identified with complex numbers), observation
 * windows, finite configurations, and the three structural operations
 * everything downstream is built on: radial labeling, translation
 * (shift), and restriction to a disk.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace loggas {

/// A location in the plane. Interoperates with std::complex<double>
/// because most kernel formulas are naturally complex-arithmetic.
struct Point {
    double re = 0.0;
    double im = 0.0;

    Point() = default;
    constexpr Point(double re_, double im_) : re(re_), im(im_) {}
    explicit Point(std::complex<double> z) : re(z.real()), im(z.imag()) {}

    [[nodiscard]] std::complex<double> cplx() const { return {re, im}; }
    [[nodiscard]] double norm2() const { return re * re + im * im; }
    [[nodiscard]] double norm() const { return std::hypot(re, im); }
    [[nodiscard]] bool finite() const {
        return std::isfinite(re) && std::isfinite(im);
    }

    friend Point operator+(Point a, Point b) { return {a.re + b.re, a.im + b.im}; }
    friend Point operator-(Point a, Point b) { return {a.re - b.re, a.im - b.im}; }
    friend Point operator*(double c, Point a) { return {c * a.re, c * a.im}; }
    friend Point operator-(Point a) { return {-a.re, -a.im}; }
    friend bool operator==(Point a, Point b) { return a.re == b.re && a.im == b.im; }
};

/// Observation window: a disk (canonical) or an axis-aligned rectangle.
struct Window {
    enum class Kind { disk, rectangle };

    Kind kind = Kind::disk;
    /// Disk: radius. Rectangle: half-extents along x and y.
    double radius = 1.0;
    double half_width = 1.0;
    double half_height = 1.0;
    Point center{0.0, 0.0};

    static Window disk(double R, Point c = {0.0, 0.0}) {
        if (!(R > 0.0)) throw std::invalid_argument("Window: radius must be > 0");
        Window w;
        w.kind = Kind::disk;
        w.radius = R;
        w.center = c;
        return w;
    }

    static Window rectangle(double half_w, double half_h, Point c = {0.0, 0.0}) {
        if (!(half_w > 0.0) || !(half_h > 0.0))
            throw std::invalid_argument("Window: extents must be > 0");
        Window w;
        w.kind = Kind::rectangle;
        w.half_width = half_w;
        w.half_height = half_h;
        w.center = c;
        return w;
    }

    [[nodiscard]] double area() const {
        return kind == Kind::disk ? std::numbers::pi * radius * radius
                                  : 4.0 * half_width * half_height;
    }

    /// Closed containment with a relative slack so boundary roundoff does
    /// not reject legitimately sampled points.
    [[nodiscard]] bool contains(Point p) const {
        const Point d = p - center;
        if (kind == Kind::disk) {
            const double slack = radius * 1e-12 + 1e-12;
            return d.norm() <= radius + slack;
        }
        const double sx = half_width * 1e-12 + 1e-12;
        const double sy = half_height * 1e-12 + 1e-12;
        return std::abs(d.re) <= half_width + sx && std::abs(d.im) <= half_height + sy;
    }

    [[nodiscard]] Window translated(Point delta) const {
        Window w = *this;
        w.center = w.center + delta;
        return w;
    }
};

/// Provenance tag carried by every configuration.
struct ConfigMeta {
    std::string field = "unspecified";  ///< e.g. "ginibre", "poisson", "gibbs"
    std::uint64_t seed = 0;
};

/**
 * @brief Finite multiset of points plus an observation window.
 *
 * Equality is multiset equality (order-free). Construction rejects
 * non-finite coordinates and points outside the window; both are
 * invariants every operation preserves.
 */
class Configuration {
public:
    Configuration() : window_(Window::disk(1.0)) {}

    Configuration(std::vector<Point> points, Window window, ConfigMeta meta = {})
        : points_(std::move(points)), window_(window), meta_(std::move(meta)) {
        for (const Point& p : points_) {
            if (!p.finite())
                throw std::invalid_argument(
                    "Configuration: non-finite coordinate rejected");
            if (!window_.contains(p))
                throw std::invalid_argument(
                    "Configuration: point outside window rejected");
        }
    }

    [[nodiscard]] const std::vector<Point>& points() const { return points_; }
    [[nodiscard]] const Window& window() const { return window_; }
    [[nodiscard]] const ConfigMeta& meta() const { return meta_; }
    [[nodiscard]] std::size_t size() const { return points_.size(); }
    [[nodiscard]] bool empty() const { return points_.empty(); }

    /// Multiset equality: same points regardless of storage order,
    /// compared exactly (bitwise on coordinates).
    friend bool operator==(const Configuration& a, const Configuration& b) {
        if (a.points_.size() != b.points_.size()) return false;
        auto sa = a.points_;
        auto sb = b.points_;
        auto lex = [](Point u, Point v) {
            return u.re != v.re ? u.re < v.re : u.im < v.im;
        };
        std::sort(sa.begin(), sa.end(), lex);
        std::sort(sb.begin(), sb.end(), lex);
        return std::equal(sa.begin(), sa.end(), sb.begin(),
                          [](Point u, Point v) { return u == v; });
    }

private:
    std::vector<Point> points_;
    Window window_;
    ConfigMeta meta_;
};

/// Angle in [0, 2π); atan2's (-π, π] range rotated into the convention
/// used by the radial labeling tie-break.
inline double angle_02pi(Point p) {
    double a = std::atan2(p.im, p.re);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    return a;
}

/**
 * @brief Label points by increasing modulus.
 *
 * Ties (probability zero under every continuous field, but reachable in
 * tests) break by increasing angle in [0, 2π), then lexicographically by
 * (re, im). Deterministic: a permutation of the input, stable under
 * repeated application.
 */
inline std::vector<Point> label_radial(const Configuration& config) {
    std::vector<Point> out = config.points();
    std::sort(out.begin(), out.end(), [](Point a, Point b) {
        const double ma = a.norm(), mb = b.norm();
        if (ma != mb) return ma < mb;
        const double aa = angle_02pi(a), ab = angle_02pi(b);
        if (aa != ab) return aa < ab;
        if (a.re != b.re) return a.re < b.re;
        return a.im < b.im;
    });
    return out;
}

/// Translate every point by -x and the window with it, so containment is
/// preserved exactly and pairwise distances are untouched.
inline Configuration shift(const Configuration& config, Point x) {
    std::vector<Point> moved;
    moved.reserve(config.size());
    for (const Point& p : config.points()) moved.push_back(p - x);
    return Configuration(std::move(moved), config.window().translated(-x),
                         config.meta());
}

/// Restriction to the open disk of radius R about the origin: keeps
/// points with |s_i| < R (strict) and replaces the window by that disk.
inline Configuration restrict_to_disk(const Configuration& config, double R) {
    if (!(R > 0.0)) throw std::invalid_argument("restrict_to_disk: R must be > 0");
    std::vector<Point> kept;
    for (const Point& p : config.points())
        if (p.norm() < R) kept.push_back(p);
    return Configuration(std::move(kept), Window::disk(R), config.meta());
}

/// Complement of the restriction: points with |s_i| >= R, original window.
inline Configuration restrict_complement(const Configuration& config, double R) {
    if (!(R > 0.0))
        throw std::invalid_argument("restrict_complement: R must be > 0");
    std::vector<Point> kept;
    for (const Point& p : config.points())
        if (!(p.norm() < R)) kept.push_back(p);
    return Configuration(std::move(kept), config.window(), config.meta());
}

}  // namespace loggas
