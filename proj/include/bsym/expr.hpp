#pragma once

#include <memory>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bsym/interval.hpp"

#include <nlohmann/json_fwd.hpp>

namespace bsym {

/// Immutable scalar field on a chart, stored as an expression tree over the
/// chart coordinates. Nodes: constant, coordinate, +, *, pow (real constant
/// exponent), sin, cos, exp, log. Derivatives are exact (tree rewriting);
/// constant folding is the only simplification performed.
///
/// log nodes require a positivity certificate: the factory takes the chart's
/// coordinate intervals and rejects arguments whose range over the domain box
/// is not strictly positive. The same applies to pow with non-integer
/// exponent. This keeps evaluation fault-free on the whole box.
class Expr {
public:
    enum class Op { Const, Coord, Add, Mul, Pow, Sin, Cos, Exp, Log };

    Expr() : Expr(constant(0.0)) {}

    static Expr constant(double v);
    static Expr coord(int index);

    static Expr add(const Expr& a, const Expr& b);
    static Expr mul(const Expr& a, const Expr& b);
    static Expr pow(const Expr& base, double exponent);             // integer exponent
    static Expr pow(const Expr& base, double exponent,
                    std::span<const Interval> box);                 // any exponent
    static Expr sin(const Expr& a);
    static Expr cos(const Expr& a);
    static Expr exp(const Expr& a);
    static Expr log(const Expr& a, std::span<const Interval> box);

    Op op() const { return node_->op; }
    double const_value() const { return node_->value; }   // Const value / Pow exponent
    int coord_index() const { return node_->coord; }
    const std::vector<Expr>& args() const { return node_->args; }

    bool is_constant() const { return node_->op == Op::Const; }
    bool is_zero() const { return is_constant() && node_->value == 0.0; }

    double eval(std::span<const double> x) const;

    /// Evaluation with subtree sharing: results are memoized per node, so
    /// heavily shared DAGs (adjugate solves) cost one visit per distinct node.
    using Cache = std::unordered_map<const void*, double>;
    double eval(std::span<const double> x, Cache& cache) const;

    Interval eval_interval(std::span<const Interval> box) const;

    /// Exact partial derivative with respect to coordinate `index`.
    Expr derivative(int index) const;

    /// Replace coordinate `index` by the constant `value`, folding.
    Expr substitute(int index, double value) const;

    bool depends_on(int index) const;
    void collect_coords(std::set<int>& out) const;

    /// Structural equality (same tree, constants compared exactly).
    friend bool equal(const Expr& a, const Expr& b);

    std::string to_string(std::span<const std::string> names = {}) const;

    nlohmann::json to_json() const;
    static Expr from_json(const nlohmann::json& j, std::span<const Interval> box);

private:
    struct Node {
        Op op;
        double value = 0.0;   // Const: value; Pow: exponent
        int coord = -1;
        std::vector<Expr> args;
    };

    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static Expr make(Node&& n);

    std::shared_ptr<const Node> node_;
};

inline Expr operator+(const Expr& a, const Expr& b) { return Expr::add(a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::mul(a, b); }
inline Expr operator-(const Expr& a) { return Expr::mul(Expr::constant(-1.0), a); }
inline Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }
inline Expr operator*(double s, const Expr& a) { return Expr::mul(Expr::constant(s), a); }
inline Expr operator/(const Expr& a, double s) { return Expr::mul(Expr::constant(1.0 / s), a); }

using SmoothField = Expr;

} // namespace bsym
