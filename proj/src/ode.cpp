#include "bsym/ode.hpp"

#include <algorithm>
#include <cmath>

#include "bsym/errors.hpp"

namespace bsym {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// embedded 4th-order weights
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

} // namespace

std::vector<double> integrate(const OdeRhs& rhs, std::vector<double> y0, double time,
                              const OdeOptions& opt, const StepObserver& observe) {
    const size_t n = y0.size();
    if (time == 0.0) {
        if (observe) observe(0.0, y0);
        return y0;
    }
    const double dir = time > 0 ? 1.0 : -1.0;
    const double t_end = time;

    std::vector<double> y = std::move(y0);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y5(n);

    if (observe) observe(0.0, y);
    rhs(y, k1);

    double t = 0.0;
    double h = dir * std::min(opt.initial_step, opt.max_step);
    double err_prev = 1.0;

    for (long step = 0; step < opt.max_steps; ++step) {
        if (dir * (t_end - t) <= 0.0) return y;
        if (std::abs(h) > std::abs(t_end - t)) h = t_end - t;
        if (std::abs(h) < 1e-15 * std::max(1.0, std::abs(t)))
            throw NumericsError("integrate: step size underflow at t = " + std::to_string(t));

        for (size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        rhs(ytmp, k2);
        for (size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(ytmp, k3);
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(ytmp, k4);
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(ytmp, k5);
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] +
                      h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(ytmp, k6);
        for (size_t i = 0; i < n; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(y5, k7);

        double err = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double y4i = y[i] + h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                           e6 * k6[i] + e7 * k7[i]);
            const double sk = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
            const double d = (y5[i] - y4i) / sk;
            err += d * d;
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (err <= 1.0) {
            t += h;
            y.swap(y5);
            k1.swap(k7);   // FSAL
            if (observe) observe(t, y);
            const double grow = 0.9 * std::pow(std::max(err, 1e-10), -0.7 / 5.0) *
                                std::pow(err_prev, 0.4 / 5.0);
            h *= std::clamp(grow, 0.2, 5.0);
            if (std::abs(h) > opt.max_step) h = dir * opt.max_step;
            err_prev = std::max(err, 1e-10);
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -1.0 / 5.0));
        }
    }
    throw NumericsError("integrate: step budget exhausted");
}

} // namespace bsym
