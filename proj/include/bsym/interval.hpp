#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace bsym {

/// Closed interval [lo, hi] with conservative arithmetic. Used to certify
/// positivity of log arguments over a chart's domain box; not a rigorous
/// rounded-interval library, just monotone range propagation.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double a, double b) : lo(std::min(a, b)), hi(std::max(a, b)) {}

    static Interval point(double v) { return {v, v}; }

    bool contains(double v) const { return lo <= v && v <= hi; }
    bool strictly_positive() const { return lo > 0.0; }
};

inline Interval operator+(const Interval& a, const Interval& b) {
    return {a.lo + b.lo, a.hi + b.hi};
}

inline Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }

inline Interval operator*(const Interval& a, const Interval& b) {
    const double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
    return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
}

inline Interval exp(const Interval& a) { return {std::exp(a.lo), std::exp(a.hi)}; }

/// Requires a.lo > 0; caller checks strictly_positive() first.
inline Interval log(const Interval& a) { return {std::log(a.lo), std::log(a.hi)}; }

inline Interval sin(const Interval&) { return {-1.0, 1.0}; }
inline Interval cos(const Interval&) { return {-1.0, 1.0}; }

/// Range of x^p for real exponent p. Integer exponents accept sign changes,
/// non-integer exponents assume (and require) a nonnegative base.
inline Interval pow(const Interval& a, double p) {
    const bool integral = p == std::floor(p);
    if (!integral) {
        const double lo = a.lo > 0 ? std::pow(a.lo, p) : 0.0;
        const double hi = a.hi > 0 ? std::pow(a.hi, p) : 0.0;
        return {std::min(lo, hi), std::max(lo, hi)};
    }
    if (p >= 0) {
        const long n = static_cast<long>(p);
        const double plo = std::pow(a.lo, p), phi = std::pow(a.hi, p);
        if (n % 2 == 0 && a.contains(0.0)) return {0.0, std::max(plo, phi)};
        return {std::min(plo, phi), std::max(plo, phi)};
    }
    // Negative integer power: unbounded across zero.
    if (a.contains(0.0)) {
        const double inf = std::numeric_limits<double>::infinity();
        return {-inf, inf};
    }
    const double plo = std::pow(a.lo, p), phi = std::pow(a.hi, p);
    return {std::min(plo, phi), std::max(plo, phi)};
}

} // namespace bsym
