#include "bsym/expr.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "bsym/errors.hpp"

namespace bsym {

namespace {

bool is_integer(double v) { return v == std::floor(v) && std::abs(v) < 1e15; }

} // namespace

Expr Expr::make(Node&& n) { return Expr(std::make_shared<const Node>(std::move(n))); }

Expr Expr::constant(double v) {
    Node n;
    n.op = Op::Const;
    n.value = v;
    return make(std::move(n));
}

Expr Expr::coord(int index) {
    if (index < 0) throw PreconditionError("Expr::coord: negative index");
    Node n;
    n.op = Op::Coord;
    n.coord = index;
    return make(std::move(n));
}

Expr Expr::add(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return constant(a.const_value() + b.const_value());
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    Node n;
    n.op = Op::Add;
    n.args = {a, b};
    return make(std::move(n));
}

Expr Expr::mul(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return constant(a.const_value() * b.const_value());
    if (a.is_zero() || b.is_zero()) return constant(0.0);
    if (a.is_constant() && a.const_value() == 1.0) return b;
    if (b.is_constant() && b.const_value() == 1.0) return a;
    Node n;
    n.op = Op::Mul;
    n.args = {a, b};
    return make(std::move(n));
}

Expr Expr::pow(const Expr& base, double exponent) {
    if (!is_integer(exponent))
        throw PreconditionError("Expr::pow: non-integer exponent needs a domain box certificate");
    if (exponent == 0.0) return constant(1.0);
    if (exponent == 1.0) return base;
    if (base.is_constant()) return constant(std::pow(base.const_value(), exponent));
    Node n;
    n.op = Op::Pow;
    n.value = exponent;
    n.args = {base};
    return make(std::move(n));
}

Expr Expr::pow(const Expr& base, double exponent, std::span<const Interval> box) {
    if (is_integer(exponent)) return pow(base, exponent);
    if (!base.eval_interval(box).strictly_positive())
        throw PreconditionError("Expr::pow: base not certified positive on the domain box");
    if (exponent == 0.0) return constant(1.0);
    if (base.is_constant()) return constant(std::pow(base.const_value(), exponent));
    Node n;
    n.op = Op::Pow;
    n.value = exponent;
    n.args = {base};
    return make(std::move(n));
}

Expr Expr::sin(const Expr& a) {
    if (a.is_constant()) return constant(std::sin(a.const_value()));
    Node n;
    n.op = Op::Sin;
    n.args = {a};
    return make(std::move(n));
}

Expr Expr::cos(const Expr& a) {
    if (a.is_constant()) return constant(std::cos(a.const_value()));
    Node n;
    n.op = Op::Cos;
    n.args = {a};
    return make(std::move(n));
}

Expr Expr::exp(const Expr& a) {
    if (a.is_constant()) return constant(std::exp(a.const_value()));
    Node n;
    n.op = Op::Exp;
    n.args = {a};
    return make(std::move(n));
}

Expr Expr::log(const Expr& a, std::span<const Interval> box) {
    if (a.is_constant()) {
        if (a.const_value() <= 0.0)
            throw PreconditionError("Expr::log: non-positive constant argument");
        return constant(std::log(a.const_value()));
    }
    if (!a.eval_interval(box).strictly_positive())
        throw PreconditionError("Expr::log: argument not certified positive on the domain box");
    Node n;
    n.op = Op::Log;
    n.args = {a};
    return make(std::move(n));
}

double Expr::eval(std::span<const double> x) const {
    const Node& n = *node_;
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Coord: return x[static_cast<size_t>(n.coord)];
        case Op::Add: return n.args[0].eval(x) + n.args[1].eval(x);
        case Op::Mul: {
            const double a = n.args[0].eval(x);
            if (a == 0.0) return 0.0;   // keeps t * (anything finite) exactly 0 on Z
            return a * n.args[1].eval(x);
        }
        case Op::Pow: return std::pow(n.args[0].eval(x), n.value);
        case Op::Sin: return std::sin(n.args[0].eval(x));
        case Op::Cos: return std::cos(n.args[0].eval(x));
        case Op::Exp: return std::exp(n.args[0].eval(x));
        case Op::Log: {
            const double v = n.args[0].eval(x);
            if (v <= 0.0) throw DomainError("Expr::eval: log of non-positive value");
            return std::log(v);
        }
    }
    return 0.0;
}

double Expr::eval(std::span<const double> x, Cache& cache) const {
    const void* key = node_.get();
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const Node& n = *node_;
    double r = 0.0;
    switch (n.op) {
        case Op::Const: r = n.value; break;
        case Op::Coord: r = x[static_cast<size_t>(n.coord)]; break;
        case Op::Add: r = n.args[0].eval(x, cache) + n.args[1].eval(x, cache); break;
        case Op::Mul: {
            const double a = n.args[0].eval(x, cache);
            r = (a == 0.0) ? 0.0 : a * n.args[1].eval(x, cache);
            break;
        }
        case Op::Pow: r = std::pow(n.args[0].eval(x, cache), n.value); break;
        case Op::Sin: r = std::sin(n.args[0].eval(x, cache)); break;
        case Op::Cos: r = std::cos(n.args[0].eval(x, cache)); break;
        case Op::Exp: r = std::exp(n.args[0].eval(x, cache)); break;
        case Op::Log: {
            const double v = n.args[0].eval(x, cache);
            if (v <= 0.0) throw DomainError("Expr::eval: log of non-positive value");
            r = std::log(v);
            break;
        }
    }
    cache.emplace(key, r);
    return r;
}

Interval Expr::eval_interval(std::span<const Interval> box) const {
    const Node& n = *node_;
    switch (n.op) {
        case Op::Const: return Interval::point(n.value);
        case Op::Coord: return box[static_cast<size_t>(n.coord)];
        case Op::Add: return n.args[0].eval_interval(box) + n.args[1].eval_interval(box);
        case Op::Mul: return n.args[0].eval_interval(box) * n.args[1].eval_interval(box);
        case Op::Pow: return bsym::pow(n.args[0].eval_interval(box), n.value);
        case Op::Sin: return bsym::sin(n.args[0].eval_interval(box));
        case Op::Cos: return bsym::cos(n.args[0].eval_interval(box));
        case Op::Exp: return bsym::exp(n.args[0].eval_interval(box));
        case Op::Log: return bsym::log(n.args[0].eval_interval(box));
    }
    return {};
}

Expr Expr::derivative(int index) const {
    const Node& n = *node_;
    switch (n.op) {
        case Op::Const: return constant(0.0);
        case Op::Coord: return constant(n.coord == index ? 1.0 : 0.0);
        case Op::Add: return add(n.args[0].derivative(index), n.args[1].derivative(index));
        case Op::Mul:
            return add(mul(n.args[0].derivative(index), n.args[1]),
                       mul(n.args[0], n.args[1].derivative(index)));
        case Op::Pow: {
            // d(u^p) = p * u^(p-1) * u'
            const Expr& u = n.args[0];
            Expr up = u.derivative(index);
            if (up.is_zero()) return up;
            Node m;
            m.op = Op::Pow;
            m.value = n.value - 1.0;
            m.args = {u};
            Expr reduced = (n.value == 2.0) ? u : (n.value == 1.0 ? constant(1.0) : make(std::move(m)));
            return mul(constant(n.value), mul(reduced, up));
        }
        case Op::Sin: return mul(cos(n.args[0]), n.args[0].derivative(index));
        case Op::Cos: return mul(constant(-1.0), mul(sin(n.args[0]), n.args[0].derivative(index)));
        case Op::Exp: return mul(*this, n.args[0].derivative(index));
        case Op::Log: {
            // argument is positivity-certified, so u^-1 is safe
            Expr up = n.args[0].derivative(index);
            if (up.is_zero()) return up;
            return mul(up, pow(n.args[0], -1.0));
        }
    }
    return constant(0.0);
}

Expr Expr::substitute(int index, double value) const {
    const Node& n = *node_;
    switch (n.op) {
        case Op::Const: return *this;
        case Op::Coord: return n.coord == index ? constant(value) : *this;
        case Op::Add: return add(n.args[0].substitute(index, value), n.args[1].substitute(index, value));
        case Op::Mul: return mul(n.args[0].substitute(index, value), n.args[1].substitute(index, value));
        case Op::Pow: {
            Expr base = n.args[0].substitute(index, value);
            if (base.is_constant()) return constant(std::pow(base.const_value(), n.value));
            Node m;
            m.op = Op::Pow;
            m.value = n.value;
            m.args = {base};
            return make(std::move(m));
        }
        case Op::Sin: return sin(n.args[0].substitute(index, value));
        case Op::Cos: return cos(n.args[0].substitute(index, value));
        case Op::Exp: return exp(n.args[0].substitute(index, value));
        case Op::Log: {
            Expr arg = n.args[0].substitute(index, value);
            if (arg.is_constant()) {
                if (arg.const_value() <= 0.0)
                    throw DomainError("Expr::substitute: log of non-positive value");
                return constant(std::log(arg.const_value()));
            }
            Node m;
            m.op = Op::Log;
            m.args = {arg};
            return make(std::move(m));
        }
    }
    return *this;
}

bool Expr::depends_on(int index) const {
    const Node& n = *node_;
    if (n.op == Op::Coord) return n.coord == index;
    for (const Expr& a : n.args)
        if (a.depends_on(index)) return true;
    return false;
}

void Expr::collect_coords(std::set<int>& out) const {
    const Node& n = *node_;
    if (n.op == Op::Coord) out.insert(n.coord);
    for (const Expr& a : n.args) a.collect_coords(out);
}

bool equal(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    const Expr::Node& x = *a.node_;
    const Expr::Node& y = *b.node_;
    if (x.op != y.op || x.value != y.value || x.coord != y.coord) return false;
    if (x.args.size() != y.args.size()) return false;
    for (size_t i = 0; i < x.args.size(); ++i)
        if (!equal(x.args[i], y.args[i])) return false;
    return true;
}

std::string Expr::to_string(std::span<const std::string> names) const {
    const Node& n = *node_;
    auto name = [&](int i) {
        if (i >= 0 && static_cast<size_t>(i) < names.size()) return names[static_cast<size_t>(i)];
        return "x" + std::to_string(i);
    };
    switch (n.op) {
        case Op::Const: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%g", n.value);
            return buf;
        }
        case Op::Coord: return name(n.coord);
        case Op::Add: return "(" + n.args[0].to_string(names) + " + " + n.args[1].to_string(names) + ")";
        case Op::Mul: return "(" + n.args[0].to_string(names) + " * " + n.args[1].to_string(names) + ")";
        case Op::Pow: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%g", n.value);
            return n.args[0].to_string(names) + "^" + buf;
        }
        case Op::Sin: return "sin(" + n.args[0].to_string(names) + ")";
        case Op::Cos: return "cos(" + n.args[0].to_string(names) + ")";
        case Op::Exp: return "exp(" + n.args[0].to_string(names) + ")";
        case Op::Log: return "log(" + n.args[0].to_string(names) + ")";
    }
    return "?";
}

nlohmann::json Expr::to_json() const {
    using nlohmann::json;
    const Node& n = *node_;
    switch (n.op) {
        case Op::Const: return json{{"op", "const"}, {"value", n.value}};
        case Op::Coord: return json{{"op", "coord"}, {"index", n.coord}};
        case Op::Add: return json{{"op", "add"}, {"args", {n.args[0].to_json(), n.args[1].to_json()}}};
        case Op::Mul: return json{{"op", "mul"}, {"args", {n.args[0].to_json(), n.args[1].to_json()}}};
        case Op::Pow:
            return json{{"op", "pow"}, {"exponent", n.value}, {"args", {n.args[0].to_json()}}};
        case Op::Sin: return json{{"op", "sin"}, {"args", {n.args[0].to_json()}}};
        case Op::Cos: return json{{"op", "cos"}, {"args", {n.args[0].to_json()}}};
        case Op::Exp: return json{{"op", "exp"}, {"args", {n.args[0].to_json()}}};
        case Op::Log: return json{{"op", "log"}, {"args", {n.args[0].to_json()}}};
    }
    return {};
}

Expr Expr::from_json(const nlohmann::json& j, std::span<const Interval> box) {
    if (!j.is_object() || !j.contains("op"))
        throw ParseError("Expr::from_json: node must be an object with an \"op\" field");
    const std::string op = j.at("op").get<std::string>();
    auto arg = [&](size_t i) { return from_json(j.at("args").at(i), box); };
    try {
        if (op == "const") return constant(j.at("value").get<double>());
        if (op == "coord") return coord(j.at("index").get<int>());
        if (op == "add") return add(arg(0), arg(1));
        if (op == "mul") return mul(arg(0), arg(1));
        if (op == "pow") return pow(arg(0), j.at("exponent").get<double>(), box);
        if (op == "sin") return sin(arg(0));
        if (op == "cos") return cos(arg(0));
        if (op == "exp") return exp(arg(0));
        if (op == "log") return log(arg(0), box);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("Expr::from_json: ") + e.what());
    }
    throw ParseError("Expr::from_json: unknown op \"" + op + "\"");
}

} // namespace bsym
