#pragma once

#include <cstdint>
#include <vector>

#include "bsym/chart.hpp"

namespace bsym {

/// Deterministic quasi-random point source on a chart: scrambled Halton
/// sequence mapped into the domain box (periodic coordinates get [0,1)).
/// A seed offsets the sequence so independent plans decorrelate.
class SamplePlan {
public:
    SamplePlan(Chart chart, std::uint64_t seed = 0);

    /// Next point in the (possibly shrunk) box interior.
    Point next(double shrink = 0.0);

    /// Next point on Z (t fixed to 0). Requires a chart with Z.
    Point next_on_z(double shrink = 0.0);

    /// Next point with |t| bounded away from 0 by at least t_margin.
    Point next_off_z(double t_margin, double shrink = 0.0);

    std::vector<Point> take(int n, double shrink = 0.0);
    std::vector<Point> take_on_z(int n, double shrink = 0.0);
    std::vector<Point> take_off_z(int n, double t_margin, double shrink = 0.0);

    const Chart& chart() const { return chart_; }

private:
    double coordinate01(int dim_index);

    Chart chart_;
    std::uint64_t index_;
};

/// Van der Corput radical inverse in the given prime base.
double radical_inverse(std::uint64_t i, int base);

/// Evenly spaced values in [iv.lo, iv.hi] (n >= 1; n == 1 gives the midpoint).
std::vector<double> linspace(const Interval& iv, int n);

} // namespace bsym
