#pragma once

#include <functional>
#include <vector>

namespace bsym {

/// Right-hand side of an autonomous ODE: writes dy/dt into `dydt`.
using OdeRhs = std::function<void(const std::vector<double>& y, std::vector<double>& dydt)>;

struct OdeOptions {
    double rel_tol = 1e-11;
    double abs_tol = 1e-12;
    double max_step = 1.0;
    double initial_step = 1e-3;
    long max_steps = 2'000'000;
};

/// Callback invoked after every accepted step with (time, state).
using StepObserver = std::function<void(double, const std::vector<double>&)>;

/// Integrates y' = f(y) from y0 over [0, time] (time may be negative) with
/// the embedded Dormand-Prince 5(4) pair and PI step-size control. Returns
/// the state at the final time exactly (the last step is shortened to land
/// on it). Throws NumericsError on step-size underflow or step budget
/// exhaustion.
std::vector<double> integrate(const OdeRhs& rhs, std::vector<double> y0, double time,
                              const OdeOptions& opt = {}, const StepObserver& observe = {});

} // namespace bsym
