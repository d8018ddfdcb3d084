#pragma once

#include <map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bsym/bfunction.hpp"
#include "bsym/chart.hpp"
#include "bsym/expr.hpp"

namespace bsym {

/// Strictly increasing tuple of coframe slots.
using MultiIndex = std::vector<int>;

/// Sort a multi-index in place; returns the permutation sign, or 0 if an
/// index repeats.
int sort_multi_index(MultiIndex& idx);

class BVectorField;

/// A b-differential k-form: for each strictly increasing multi-index over the
/// b-coframe (dt/t, dx_1, ..., dx_{2n-1}) a smooth coefficient field.
/// Antisymmetry is structural; only increasing indices are stored.
class BForm {
public:
    BForm(Chart chart, int degree);

    const Chart& chart() const { return chart_; }
    int degree() const { return degree_; }
    const std::map<MultiIndex, Expr>& terms() const { return terms_; }

    /// Adds coeff * e_{idx}; idx is sorted and the sign folded in.
    BForm& add_term(MultiIndex idx, const Expr& coeff);

    Expr coeff(const MultiIndex& idx) const;

    BForm operator+(const BForm& o) const;
    BForm operator-(const BForm& o) const;
    BForm scaled(const Expr& s) const;
    BForm scaled(double s) const;

    /// Pointwise values of all coefficients, as the antisymmetric array
    /// indexed by the increasing multi-indices (degree-2 helper below).
    double eval_coeff(const MultiIndex& idx, const Point& p) const;

    /// Multilinear antisymmetric contraction with k b-vector fields at p.
    double pair(const std::vector<const BVectorField*>& fields, const Point& p) const;

    /// Interior product with a b-vector field (symbolic).
    BForm interior(const BVectorField& X) const;

    /// Coefficients restricted to Z (t := 0 substituted).
    BForm restricted_to_z() const;

    bool is_zero() const { return terms_.empty(); }

    nlohmann::json to_json() const;
    static BForm from_json(const nlohmann::json& j, const Chart& chart);

private:
    Chart chart_;
    int degree_;
    std::map<MultiIndex, Expr> terms_;
};

/// Graded wedge product. Throws on degree overflow.
BForm wedge(const BForm& a, const BForm& b);

/// Extended exterior derivative on b-forms: d(c e_I) = (db c) ^ e_I with
/// db the b-differential (slot 0 carries t * dc/dt).
BForm exterior_d(const BForm& w);

/// b-differential of a b-function: d(c log|t| + g) = (c + t dg/dt) dt/t + dg.
BForm b_differential(const Chart& chart, const BFunction& f);

/// Lie derivative along a b-vector field via the Cartan formula with the
/// extended d: L_X w = d(i_X w) + i_X(dw).
BForm lie_derivative(const BForm& w, const BVectorField& X);

/// A b-vector field in the b-frame (t d/dt, d/dx_i): one smooth coefficient
/// per frame slot. The induced smooth vector field has t-component t*v_0,
/// which vanishes identically on Z.
class BVectorField {
public:
    BVectorField(Chart chart, std::vector<Expr> coeffs);

    const Chart& chart() const { return chart_; }
    const std::vector<Expr>& coeffs() const { return coeffs_; }
    const Expr& coeff(int slot) const { return coeffs_[static_cast<size_t>(slot)]; }

    /// b-frame coefficients at p.
    std::vector<double> eval_frame(const Point& p) const;

    /// Velocity of the induced smooth vector field, in coordinate order
    /// (the t-coordinate component is t * v_0; exactly 0 on Z).
    std::vector<double> eval_smooth(const Point& p) const;

    BVectorField operator+(const BVectorField& o) const;
    BVectorField scaled(const Expr& s) const;

private:
    Chart chart_;
    std::vector<Expr> coeffs_;
};

} // namespace bsym
