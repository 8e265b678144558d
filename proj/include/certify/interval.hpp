#ifndef CERTIFY_INTERVAL_HPP
#define CERTIFY_INTERVAL_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace certify {

struct IntervalError : std::runtime_error {
    explicit IntervalError(const std::string& what) : std::runtime_error(what) {}
};

// Closed interval [lo, hi].  Soundness comes from a relative outward
// inflation applied after each operation instead of directed rounding.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    explicit Interval(double v) : lo(v), hi(v) {}
    Interval(double l, double h) : lo(l), hi(h) {
        if (!(lo <= hi)) throw IntervalError("interval with lo > hi");
    }

    double width() const { return hi - lo; }
    double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }
    bool contains(double v) const { return lo <= v && v <= hi; }
    bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
};

namespace detail {
inline constexpr double kInflate = 1e-15;

inline Interval inflate(double lo, double hi) {
    const double el = std::fabs(lo) * kInflate;
    const double eh = std::fabs(hi) * kInflate;
    return Interval(lo - el, hi + eh);
}
} // namespace detail

inline Interval operator+(Interval a, Interval b) {
    return detail::inflate(a.lo + b.lo, a.hi + b.hi);
}

inline Interval operator-(Interval a, Interval b) {
    return detail::inflate(a.lo - b.hi, a.hi - b.lo);
}

inline Interval operator-(Interval a) { return Interval(-a.hi, -a.lo); }

inline Interval operator*(Interval a, Interval b) {
    const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    return detail::inflate(std::min(std::min(p1, p2), std::min(p3, p4)),
                           std::max(std::max(p1, p2), std::max(p3, p4)));
}

inline Interval operator/(Interval a, Interval b) {
    if (b.contains_zero()) throw IntervalError("division by interval containing zero");
    return a * detail::inflate(1.0 / b.hi, 1.0 / b.lo);
}

// Tight integer power (even powers clamp at zero when the base spans it).
inline Interval int_pow(Interval a, int n) {
    if (n < 0) throw IntervalError("negative integer power");
    if (n == 0) return Interval(1.0);
    const double pl = std::pow(a.lo, n), ph = std::pow(a.hi, n);
    if (n % 2 == 1) return detail::inflate(pl, ph);
    double lo = std::min(pl, ph), hi = std::max(pl, ph);
    if (a.contains_zero()) lo = 0.0;
    return detail::inflate(lo, hi);
}

inline Interval exp(Interval a) { return detail::inflate(std::exp(a.lo), std::exp(a.hi)); }

inline Interval log(Interval a) {
    if (a.lo <= 0.0) throw IntervalError("log of interval touching nonpositive values");
    return detail::inflate(std::log(a.lo), std::log(a.hi));
}

inline Interval sqrt(Interval a) {
    if (a.lo < 0.0) throw IntervalError("sqrt of interval touching negative values");
    return detail::inflate(std::sqrt(a.lo), std::sqrt(a.hi));
}

inline Interval tanh(Interval a) { return detail::inflate(std::tanh(a.lo), std::tanh(a.hi)); }

namespace detail {
// Does [lo, hi] contain a point x = phase + 2*pi*k for some integer k?
inline bool crosses(double lo, double hi, double phase) {
    const double twopi = 2.0 * M_PI;
    const double k = std::ceil((lo - phase) / twopi);
    return phase + k * twopi <= hi;
}
} // namespace detail

namespace detail {
inline double out_hi(double v) { return v + (std::fabs(v) + 1.0) * kInflate; }
inline double out_lo(double v) { return v - (std::fabs(v) + 1.0) * kInflate; }
} // namespace detail

// sin/cos detect whether the argument spans a critical point; otherwise they
// evaluate at the endpoints.  Results are clamped to [-1, 1].
inline Interval sin(Interval a) {
    if (a.width() >= 2.0 * M_PI) return Interval(-1.0, 1.0);
    const double hi = detail::crosses(a.lo, a.hi, M_PI / 2.0)
                          ? 1.0
                          : detail::out_hi(std::max(std::sin(a.lo), std::sin(a.hi)));
    const double lo = detail::crosses(a.lo, a.hi, -M_PI / 2.0)
                          ? -1.0
                          : detail::out_lo(std::min(std::sin(a.lo), std::sin(a.hi)));
    return Interval(std::max(lo, -1.0), std::min(hi, 1.0));
}

inline Interval cos(Interval a) {
    if (a.width() >= 2.0 * M_PI) return Interval(-1.0, 1.0);
    const double hi = detail::crosses(a.lo, a.hi, 0.0)
                          ? 1.0
                          : detail::out_hi(std::max(std::cos(a.lo), std::cos(a.hi)));
    const double lo = detail::crosses(a.lo, a.hi, M_PI)
                          ? -1.0
                          : detail::out_lo(std::min(std::cos(a.lo), std::cos(a.hi)));
    return Interval(std::max(lo, -1.0), std::min(hi, 1.0));
}

inline Interval abs(Interval a) {
    if (a.lo >= 0.0) return a;
    if (a.hi <= 0.0) return Interval(-a.hi, -a.lo);
    return Interval(0.0, a.mag());
}

} // namespace certify

#endif
