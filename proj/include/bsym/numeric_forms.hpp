#pragma once

#include <functional>

#include <Eigen/Dense>

#include "bsym/dynamics.hpp"

namespace bsym {

using PointMap = std::function<Point(const Point&)>;
using FrameFieldFn = std::function<std::vector<double>(const Point&)>;   // b-frame coefficients
using MatrixFieldFn = std::function<Eigen::MatrixXd(const Point&)>;

/// b-frame Jacobian J_ab = < e_a at psi(p), dpsi(u_b at p) > by central
/// finite differences. The t-column perturbs multiplicatively (t -> t e^{+-h})
/// and the t-row takes log|t o psi| differences; periodic target rows are
/// wrapped. Requires t(p) != 0 when both charts carry Z (evaluate near Z,
/// not on it).
Eigen::MatrixXd bframe_jacobian(const Chart& in, const Chart& out, const PointMap& psi,
                                const Point& p, double h = 1e-6);

/// Directional derivative of a scalar in the b-frame direction `slot`
/// (slot 0 applies t d/dt, exactly 0 on Z).
double bframe_scalar_derivative(const Chart& chart, const ScalarFn& f, const Point& p, int slot,
                                double h = 1e-5);

/// Pullback (psi^* w)(p) of a two-form given by its coefficient matrix field
/// on the target chart.
Eigen::MatrixXd pullback_two_form(const Chart& in, const Chart& out, const PointMap& psi,
                                  const MatrixFieldFn& omega_out, const Point& p, double h = 1e-6);

/// Coefficient matrix of a symbolic two-form at p.
MatrixFieldFn two_form_matrix(const BForm& w);

/// One-form with pointwise coefficients (slot-indexed).
struct NumericOneForm {
    Chart chart;
    std::vector<ScalarFn> comp;
};

/// iota_Y w for a two-form w and a b-frame pointwise field Y.
NumericOneForm interior_two_form(const BForm& w, const FrameFieldFn& Y);

/// Coefficient matrix of the b-exterior derivative of a pointwise one-form:
/// (d eta)_ab = D_a eta_b - D_b eta_a with b-frame directional derivatives.
Eigen::MatrixXd numeric_d_one_form(const NumericOneForm& eta, const Point& p, double h = 1e-5);

/// L_Y w at p via the Cartan formula: d(iota_Y w) + iota_Y(dw); the first
/// term differentiates the contracted coefficients numerically, the second
/// contracts the symbolic dw pointwise. Entrywise coefficient matrix.
Eigen::MatrixXd lie_derivative_cartan(const BForm& w, const FrameFieldFn& Y_frame,
                                      const Point& p, double h = 1e-5);

/// L_Y w at p from flow pullbacks: (Phi_s^* w - Phi_{-s}^* w) / 2s.
Eigen::MatrixXd lie_derivative_flow(const Chart& chart, const BForm& w, const VectorFieldFn& Y,
                                    const Point& p, double s = 1e-2, double h = 1e-4,
                                    const OdeOptions& opt = {1e-12, 1e-13, 1.0, 1e-3, 2'000'000});

/// L_Y L_Y w at p by nested finite differences of flow pullbacks:
/// second central difference of s -> (Phi_s^* w)(p).
Eigen::MatrixXd double_lie_derivative_flow(const Chart& chart, const BForm& w,
                                           const VectorFieldFn& Y, const Point& p, double s = 0.1,
                                           double h = 1e-4,
                                           const OdeOptions& opt = {1e-12, 1e-13, 1.0, 1e-3,
                                                                    2'000'000});

/// Nodes and weights of the n-point Gauss-Legendre rule on [0, 1].
void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights);

} // namespace bsym
