#include "bsym/numeric_forms.hpp"

#include <cmath>

#include "bsym/errors.hpp"

namespace bsym {

namespace {

// difference of target-chart points expressed against the out b-coframe rows
Eigen::VectorXd row_delta(const Chart& out, const Point& a, const Point& b) {
    const int n = out.dim();
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) {
        const size_t k = static_cast<size_t>(i);
        double v;
        if (out.periodic_coord(i))
            v = wrap_centered(a[k] - b[k]);
        else
            v = a[k] - b[k];
        d(out.slot_of_coord(i)) = v;
    }
    if (out.has_z()) {
        const double ta = a[static_cast<size_t>(out.t_index())];
        const double tb = b[static_cast<size_t>(out.t_index())];
        if (ta * tb <= 0.0)
            throw NumericsError("bframe_jacobian: map output crossed or touched Z");
        d(0) = std::log(std::abs(ta)) - std::log(std::abs(tb));
    }
    return d;
}

} // namespace

Eigen::MatrixXd bframe_jacobian(const Chart& in, const Chart& out, const PointMap& psi,
                                const Point& p, double h) {
    const int n = in.dim();
    if (out.dim() != n) throw PreconditionError("bframe_jacobian: dimension mismatch");
    if (in.has_z() && in.t_value(p) == 0.0)
        throw PreconditionError("bframe_jacobian: evaluate off Z (|t| > 0)");
    Eigen::MatrixXd J(n, n);
    for (int slot = 0; slot < n; ++slot) {
        Point pp = p, pm = p;
        double denom = 2.0 * h;
        if (in.has_z() && slot == 0) {
            const size_t ti = static_cast<size_t>(in.t_index());
            pp[ti] = p[ti] * std::exp(h);
            pm[ti] = p[ti] * std::exp(-h);
        } else {
            const size_t ci = static_cast<size_t>(in.coord_of_slot(slot));
            pp[ci] += h;
            pm[ci] -= h;
        }
        J.col(slot) = row_delta(out, psi(pp), psi(pm)) / denom;
    }
    return J;
}

double bframe_scalar_derivative(const Chart& chart, const ScalarFn& f, const Point& p, int slot,
                                double h) {
    Point pp = p, pm = p;
    if (chart.has_z() && slot == 0) {
        const size_t ti = static_cast<size_t>(chart.t_index());
        const double t = p[ti];
        if (t == 0.0) return 0.0;   // t d/dt kills everything on Z
        pp[ti] = t * std::exp(h);
        pm[ti] = t * std::exp(-h);
    } else {
        const size_t ci = static_cast<size_t>(chart.coord_of_slot(slot));
        pp[ci] += h;
        pm[ci] -= h;
    }
    return (f(pp) - f(pm)) / (2.0 * h);
}

Eigen::MatrixXd pullback_two_form(const Chart& in, const Chart& out, const PointMap& psi,
                                  const MatrixFieldFn& omega_out, const Point& p, double h) {
    const Eigen::MatrixXd J = bframe_jacobian(in, out, psi, p, h);
    const Eigen::MatrixXd W = omega_out(psi(p));
    return J.transpose() * W * J;
}

MatrixFieldFn two_form_matrix(const BForm& w) {
    if (w.degree() != 2) throw PreconditionError("two_form_matrix: degree must be 2");
    return [w](const Point& p) {
        const int n = w.chart().dim();
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        Expr::Cache cache;
        for (const auto& [idx, c] : w.terms()) {
            const double v = c.eval(p, cache);
            m(idx[0], idx[1]) = v;
            m(idx[1], idx[0]) = -v;
        }
        return m;
    };
}

NumericOneForm interior_two_form(const BForm& w, const FrameFieldFn& Y) {
    if (w.degree() != 2) throw PreconditionError("interior_two_form: degree must be 2");
    NumericOneForm eta{w.chart(), {}};
    const MatrixFieldFn mat = two_form_matrix(w);
    const int n = w.chart().dim();
    for (int b = 0; b < n; ++b) {
        eta.comp.push_back([mat, Y, b](const Point& p) {
            const Eigen::MatrixXd m = mat(p);
            const auto y = Y(p);
            double acc = 0.0;
            for (int a = 0; a < m.rows(); ++a) acc += y[static_cast<size_t>(a)] * m(a, b);
            return acc;   // (iota_Y w)(u_b) = w(Y, u_b)
        });
    }
    return eta;
}

Eigen::MatrixXd numeric_d_one_form(const NumericOneForm& eta, const Point& p, double h) {
    const int n = eta.chart.dim();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const double v = bframe_scalar_derivative(eta.chart, eta.comp[static_cast<size_t>(b)], p, a, h) -
                             bframe_scalar_derivative(eta.chart, eta.comp[static_cast<size_t>(a)], p, b, h);
            d(a, b) = v;
            d(b, a) = -v;
        }
    }
    return d;
}

Eigen::MatrixXd lie_derivative_cartan(const BForm& w, const FrameFieldFn& Y_frame, const Point& p,
                                      double h) {
    const Chart& chart = w.chart();
    const int n = chart.dim();
    const NumericOneForm eta = interior_two_form(w, Y_frame);
    Eigen::MatrixXd L = numeric_d_one_form(eta, p, h);
    if (w.degree() < n) {
        const BForm dw = exterior_d(w);
        const auto y = Y_frame(p);
        Expr::Cache cache;
        for (const auto& [idx, c] : dw.terms()) {
            const double v = c.eval(p, cache);
            // iota_Y (e_c ^ e_a ^ e_b) distributes with alternating signs
            const int i0 = idx[0], i1 = idx[1], i2 = idx[2];
            L(i1, i2) += v * y[static_cast<size_t>(i0)];
            L(i2, i1) -= v * y[static_cast<size_t>(i0)];
            L(i0, i2) -= v * y[static_cast<size_t>(i1)];
            L(i2, i0) += v * y[static_cast<size_t>(i1)];
            L(i0, i1) += v * y[static_cast<size_t>(i2)];
            L(i1, i0) -= v * y[static_cast<size_t>(i2)];
        }
    }
    return L;
}

Eigen::MatrixXd lie_derivative_flow(const Chart& chart, const BForm& w, const VectorFieldFn& Y,
                                    const Point& p, double s, double h, const OdeOptions& opt) {
    const MatrixFieldFn mat = two_form_matrix(w);
    auto pull = [&](double time) {
        const PointMap psi = [&](const Point& q) { return flow_to(chart, Y, q, time, opt); };
        return pullback_two_form(chart, chart, psi, mat, p, h);
    };
    return (pull(s) - pull(-s)) / (2.0 * s);
}

Eigen::MatrixXd double_lie_derivative_flow(const Chart& chart, const BForm& w,
                                           const VectorFieldFn& Y, const Point& p, double s,
                                           double h, const OdeOptions& opt) {
    const MatrixFieldFn mat = two_form_matrix(w);
    auto pull = [&](double time) {
        if (time == 0.0) return mat(p);
        const PointMap psi = [&](const Point& q) { return flow_to(chart, Y, q, time, opt); };
        return pullback_two_form(chart, chart, psi, mat, p, h);
    };
    return (pull(s) - 2.0 * pull(0.0) + pull(-s)) / (s * s);
}

void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<size_t>(n), 0.0);
    weights.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Newton iteration on P_n over [-1, 1]
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double wgt = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[static_cast<size_t>(i)] = 0.5 * (1.0 - x);
        nodes[static_cast<size_t>(n - 1 - i)] = 0.5 * (1.0 + x);
        weights[static_cast<size_t>(i)] = 0.5 * wgt;
        weights[static_cast<size_t>(n - 1 - i)] = 0.5 * wgt;
    }
}

} // namespace bsym
