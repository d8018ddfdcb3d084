#pragma once

#include <nlohmann/json_fwd.hpp>

#include "bsym/chart.hpp"
#include "bsym/expr.hpp"

namespace bsym {

/// A b-function c*log|t| + g on a chart: real singular coefficient c plus a
/// smooth part g. Smooth functions are the c == 0 case. On charts without a
/// critical hypersurface only c == 0 is admissible.
class BFunction {
public:
    BFunction() : c_(0.0), g_(Expr::constant(0.0)) {}
    BFunction(double c, Expr g) : c_(c), g_(std::move(g)) {}
    /// Smooth b-function (c = 0).
    explicit BFunction(Expr g) : c_(0.0), g_(std::move(g)) {}

    double c() const { return c_; }
    const Expr& g() const { return g_; }
    bool is_smooth() const { return c_ == 0.0; }

    /// c*log|t(p)| + g(p); returns +-infinity at t = 0 when c != 0.
    double eval(const Chart& chart, const Point& p) const;

    BFunction operator+(const BFunction& o) const { return {c_ + o.c_, g_ + o.g_}; }
    BFunction operator-(const BFunction& o) const { return {c_ - o.c_, g_ - o.g_}; }
    friend BFunction operator*(double s, const BFunction& f) { return {s * f.c_, s * f.g_}; }

    nlohmann::json to_json() const;
    static BFunction from_json(const nlohmann::json& j, std::span<const Interval> box);

private:
    double c_;
    Expr g_;
};

/// Candidate "c(x)*log|t| + g" with a possibly non-constant log coefficient.
/// is_bfunction() is the machine check that the coefficient is a genuine
/// constant, i.e. that the candidate extends to a b-function on the chart.
struct LogCandidate {
    Expr log_coefficient;
    Expr smooth_part;

    bool is_bfunction() const { return log_coefficient.is_constant(); }
};

} // namespace bsym
