#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "bsym/bform.hpp"
#include "bsym/sampling.hpp"

namespace bsym {

/// Sign convention C1, fixed globally:
///   iota_{X_f} omega = -df,   {f, g} = omega(X_f, X_g) = X_f(g).
/// With the coefficient matrix Omega_ab = omega(u_a, u_b) in the b-frame
/// (u_0 = t d/dt, u_s = d/dx), C1 makes X_f the solution of
///   Omega(p) * v = df(p).
/// Under C1 the so(3) relations {f1,f2} = f3 (cyclic) hold exactly for
/// omega = sum dx_i ^ dy_i.
struct StructureOptions {
    int samples = 60;
    int z_samples = 40;
    std::uint64_t seed = 1;
    double det_tol = 1e-10;
};

class BSymplecticStructure {
public:
    using Options = StructureOptions;

    BSymplecticStructure(Chart chart, BForm omega, const Options& opt = Options{});

    const Chart& chart() const { return chart_; }
    const BForm& omega() const { return omega_; }
    bool constant_coefficients() const { return constant_; }
    bool critical_z() const { return critical_z_; }

    /// Pointwise coefficient matrix Omega_ab = omega(u_a, u_b).
    Eigen::MatrixXd omega_matrix(const Point& p) const;

    /// Hamiltonian vector field of a b-function under C1 (symbolic
    /// coefficients: numeric inverse when Omega is constant, memoized
    /// adjugate solve otherwise).
    BVectorField hamiltonian_field(const BFunction& f) const;

    /// {f, g} = omega(X_f, X_g). Always smooth: the log parts cancel.
    SmoothField poisson_bracket(const BFunction& f, const BFunction& g) const;

    /// max over points of |{{f,g},h} + {{g,h},f} + {{h,f},g}|.
    double jacobi_residual(const BFunction& f, const BFunction& g, const BFunction& h,
                           const std::vector<Point>& points) const;

private:
    void check_nondegenerate(const Options& opt);
    const std::vector<std::vector<Expr>>& adjugate() const;
    const Expr& determinant_expr() const;

    Chart chart_;
    BForm omega_;
    bool constant_ = false;
    bool critical_z_ = false;
    Eigen::MatrixXd omega_const_;
    Eigen::MatrixXd omega_const_inv_;
    mutable std::optional<std::vector<std::vector<Expr>>> adj_;
    mutable std::optional<Expr> det_;
};

/// Mazzeo-Melrose style pointwise split omega = dt/t ^ alpha + beta.
/// residue = alpha restricted to Z; smooth_part = beta (no dt/t slots).
struct ResidueSplit {
    BForm residue;       // degree k-1, coefficients evaluated at t = 0
    BForm smooth_part;   // degree k
};

ResidueSplit residue_split(const BForm& omega);

/// Non-throwing structure verification, reporting closedness, b-frame
/// nondegeneracy (including a grid on Z) and the criticality of Z.
struct StructureReport {
    bool closed = false;
    double closedness_residual = 0.0;
    bool nondegenerate = false;
    double min_abs_det = 0.0;       // in the frame used for the verdict
    bool z_critical = false;        // dt/t row nonzero on Z
    bool symplectic_fallback = false; // passed as a smooth symplectic form
    int points_tested = 0;
    bool pass = false;

    nlohmann::json to_json() const;
};

StructureReport verify_bsymplectic(const Chart& chart, const BForm& omega,
                                   int samples = 100, std::uint64_t seed = 3,
                                   double det_tol = 1e-10);

} // namespace bsym
