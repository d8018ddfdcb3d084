#include "bsym/sampling.hpp"

#include <cmath>

#include "bsym/errors.hpp"

namespace bsym {

namespace {
constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
}

double radical_inverse(std::uint64_t i, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
        i /= static_cast<std::uint64_t>(base);
        f *= inv;
    }
    return r;
}

SamplePlan::SamplePlan(Chart chart, std::uint64_t seed)
    : chart_(std::move(chart)), index_(17 + seed * 7919) {
    if (chart_.dim() > static_cast<int>(sizeof kPrimes / sizeof kPrimes[0]))
        throw PreconditionError("SamplePlan: chart dimension too large");
}

double SamplePlan::coordinate01(int d) {
    return radical_inverse(index_, kPrimes[d]);
}

Point SamplePlan::next(double shrink) {
    ++index_;
    Point p(static_cast<size_t>(chart_.dim()));
    for (int d = 0; d < chart_.dim(); ++d) {
        const double u = coordinate01(d);
        const size_t k = static_cast<size_t>(d);
        if (chart_.periodic_coord(d)) {
            p[k] = u;
        } else {
            const Interval& iv = chart_.box()[k];
            const double half = 0.5 * (iv.hi - iv.lo) * (1.0 - shrink);
            const double mid = 0.5 * (iv.hi + iv.lo);
            p[k] = mid + (2.0 * u - 1.0) * half;
        }
    }
    return p;
}

Point SamplePlan::next_on_z(double shrink) {
    if (!chart_.has_z()) throw PreconditionError("SamplePlan: chart has no Z");
    Point p = next(shrink);
    p[static_cast<size_t>(chart_.t_index())] = 0.0;
    return p;
}

Point SamplePlan::next_off_z(double t_margin, double shrink) {
    if (!chart_.has_z()) return next(shrink);
    const size_t ti = static_cast<size_t>(chart_.t_index());
    for (int tries = 0; tries < 1000; ++tries) {
        Point p = next(shrink);
        if (std::abs(p[ti]) >= t_margin) return p;
    }
    throw NumericsError("SamplePlan: could not sample away from Z (margin too large?)");
}

std::vector<Point> SamplePlan::take(int n, double shrink) {
    std::vector<Point> v;
    v.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v.push_back(next(shrink));
    return v;
}

std::vector<Point> SamplePlan::take_on_z(int n, double shrink) {
    std::vector<Point> v;
    v.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v.push_back(next_on_z(shrink));
    return v;
}

std::vector<Point> SamplePlan::take_off_z(int n, double t_margin, double shrink) {
    std::vector<Point> v;
    v.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v.push_back(next_off_z(t_margin, shrink));
    return v;
}

std::vector<double> linspace(const Interval& iv, int n) {
    std::vector<double> v;
    if (n <= 1) {
        v.push_back(0.5 * (iv.lo + iv.hi));
        return v;
    }
    for (int i = 0; i < n; ++i)
        v.push_back(iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) / (n - 1));
    return v;
}

} // namespace bsym
