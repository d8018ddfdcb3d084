#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "bsym/ode.hpp"
#include "bsym/system.hpp"

namespace bsym {

/// Pointwise vector field: smooth-frame velocity at a (wrapped) point.
using VectorFieldFn = std::function<std::vector<double>(const Point&)>;

/// Closure evaluating the induced smooth field of X (t-component t*v_0).
VectorFieldFn smooth_velocity(const BVectorField& X);

/// RHS adapter: wraps periodic coordinates and guards the domain box.
OdeRhs field_rhs(const Chart& chart, const VectorFieldFn& v);

struct Trajectory {
    std::vector<double> times;
    std::vector<Point> states;

    const Point& back() const { return states.back(); }
    void write_csv(std::ostream& os, const Chart& chart) const;
};

/// Flow of the b-Hamiltonian field X_f, recording every accepted step.
Trajectory flow(const BSymplecticStructure& S, const BFunction& f, const Point& p0, double time,
                const OdeOptions& opt = {});

/// Endpoint of the flow of a pointwise field.
Point flow_to(const Chart& chart, const VectorFieldFn& v, Point p0, double time,
              const OdeOptions& opt = {});

/// Joint flow Phi^s = Phi_{X_1}^{s_1} o ... o Phi_{X_r}^{s_r} (rightmost
/// applied first; order immaterial for commuting fields).
Point joint_flow(const Chart& chart, const std::vector<VectorFieldFn>& fields, Point p0,
                 const std::vector<double>& s, const OdeOptions& opt = {});

struct PeriodLatticeBasis {
    Point base_point;
    Eigen::MatrixXd basis;          // r x r, row i = lambda_i
    std::vector<double> residuals;  // per-row return residual |Phi^lambda(p0) - p0|
    double modular_period = 0.0;    // |lambda_1^1|

    nlohmann::json to_json() const;
};

struct LatticeOptions {
    double scan_span = 2.5;       // initial scan box half-width (auto-doubled)
    double scan_step = 0.25;
    double scan_accept = 0.35;    // wrapped-distance threshold for Newton seeds
    double residual_tol = 1e-8;
    int max_span_doublings = 5;
    OdeOptions ode{1e-12, 1e-13, 1.0, 1e-3, 2'000'000};
    OdeOptions scan_ode{1e-8, 1e-9, 1.0, 1e-2, 2'000'000};
    std::optional<Eigen::MatrixXd> seed_basis;  // skip the scan, refine this
};

/// Detects a basis of the period lattice of the torus through p0 by a grid
/// scan of the joint-flow return distance plus Newton refinement with a
/// finite-difference monodromy, then normalizes by integer column operations
/// so lambda_i^1 is reduced (vanishing on Z) for i > 1 and lambda_1^1 > 0.
PeriodLatticeBasis period_lattice(const NCBSystem& sys, const Point& p0,
                                  const LatticeOptions& opt = {});

/// lambda as a field over the transverse coordinates: per-axis uniform grids
/// with tensor-product Catmull-Rom interpolation (linear data reproduced
/// exactly, ghost nodes extrapolated linearly at the edges).
class LatticeField {
public:
    LatticeField() = default;
    LatticeField(std::vector<int> coords, std::vector<std::vector<double>> axes,
                 std::vector<Eigen::MatrixXd> values);

    Eigen::MatrixXd eval(const Point& p) const;
    const std::vector<int>& transverse_coords() const { return coords_; }
    const std::vector<std::vector<double>>& axes() const { return axes_; }
    int rank() const { return values_.empty() ? 0 : static_cast<int>(values_[0].rows()); }

private:
    double node_weighted(int dim, std::vector<int>& idx, const std::vector<double>& frac,
                         int i, int j) const;
    const Eigen::MatrixXd& node(const std::vector<int>& idx) const;

    std::vector<int> coords_;
    std::vector<std::vector<double>> axes_;
    std::vector<long> strides_;
    std::vector<Eigen::MatrixXd> values_;
};

struct LatticeGridSpec {
    int nodes_scaled = 5;    // grid resolution on the first r transverse coords
    int nodes_rest = 3;      // resolution on the remaining (p, q) coords
    double shrink = 0.12;    // stay inside the box by this relative margin
};

/// Runs period_lattice on a grid of transverse values (continuation-seeded
/// march) and wraps the result in an interpolating LatticeField.
LatticeField build_lattice_field(const NCBSystem& sys, const LatticeGridSpec& spec = {},
                                 const LatticeOptions& opt = {});

struct UniformizedAction {
    std::vector<VectorFieldFn> fields;   // Y_1..Y_r, unit-period generators
    LatticeField lambda;                 // as stored (lambda_1^1 > 0)
    Eigen::VectorXd gauge;               // row signs applied to lambda when forming Y
    double modular_period = 0.0;
};

/// Y_i = sum_j lambda_i^j X_{f_j} with the lambda_1 orientation chosen so
/// that iota_{Y_1} omega = +c d log|t| with c > 0 (hence a_1 = c log|t|).
UniformizedAction uniformize(const NCBSystem& sys, const LatticeField& lambda);

/// ||Phi_Y^1(p0) - p0|| with periodic coordinates wrapped.
double unit_return_residual(const Chart& chart, const VectorFieldFn& Y, const Point& p0,
                            const OdeOptions& opt = {1e-12, 1e-13, 1.0, 1e-3, 2'000'000});

/// Commutation defect |Phi_a^s Phi_b^s (p) - Phi_b^s Phi_a^s (p)|.
double flow_order_residual(const Chart& chart, const VectorFieldFn& a, const VectorFieldFn& b,
                           const Point& p0, double s = 1.0, const OdeOptions& opt = {});

/// Max drift over the trajectory of the integrals in involution with f.
double conservation_drift(const NCBSystem& sys, const BFunction& f, const Point& p0, double time,
                          const OdeOptions& opt = {});

} // namespace bsym
