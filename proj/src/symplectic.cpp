#include "bsym/symplectic.hpp"

#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "bsym/errors.hpp"

namespace bsym {

namespace {

// Memoized Laplace expansion over (row set, column set) bit masks. The
// resulting expression DAG shares minors, so evaluation with a cache stays
// cheap even for 6x6 coefficient matrices.
class SymbolicDet {
public:
    explicit SymbolicDet(const std::vector<std::vector<Expr>>& m) : m_(m), n_(m.size()) {}

    Expr det(std::uint32_t rows, std::uint32_t cols) {
        const std::uint64_t key = (static_cast<std::uint64_t>(rows) << 32) | cols;
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        Expr result = Expr::constant(0.0);
        const int r0 = std::countr_zero(rows);
        if ((rows & (rows - 1)) == 0) {
            const int c0 = std::countr_zero(cols);
            result = m_[static_cast<size_t>(r0)][static_cast<size_t>(c0)];
        } else {
            int pos = 0;
            for (int c = 0; c < static_cast<int>(n_); ++c) {
                if (!(cols & (1u << c))) continue;
                const Expr& a = m_[static_cast<size_t>(r0)][static_cast<size_t>(c)];
                if (!a.is_zero()) {
                    Expr sub = det(rows & ~(1u << r0), cols & ~(1u << c));
                    Expr term = Expr::mul(a, sub);
                    result = result + (pos % 2 == 0 ? term : -term);
                }
                ++pos;
            }
        }
        memo_.emplace(key, result);
        return result;
    }

    Expr full_det() {
        const std::uint32_t all = (1u << n_) - 1u;
        return det(all, all);
    }

    /// adj(A)_{ij} = (-1)^{i+j} * minor deleting row j, column i.
    Expr adjugate(int i, int j) {
        const std::uint32_t all = (1u << n_) - 1u;
        Expr minor = det(all & ~(1u << j), all & ~(1u << i));
        return (i + j) % 2 == 0 ? minor : -minor;
    }

private:
    const std::vector<std::vector<Expr>>& m_;
    size_t n_;
    std::unordered_map<std::uint64_t, Expr> memo_;
};

std::vector<std::vector<Expr>> omega_expr_matrix(const Chart& chart, const BForm& omega) {
    const size_t n = static_cast<size_t>(chart.dim());
    std::vector<std::vector<Expr>> m(n, std::vector<Expr>(n, Expr::constant(0.0)));
    for (const auto& [idx, c] : omega.terms()) {
        m[static_cast<size_t>(idx[0])][static_cast<size_t>(idx[1])] = c;
        m[static_cast<size_t>(idx[1])][static_cast<size_t>(idx[0])] = -c;
    }
    return m;
}

} // namespace

BSymplecticStructure::BSymplecticStructure(Chart chart, BForm omega, const Options& opt)
    : chart_(std::move(chart)), omega_(std::move(omega)) {
    if (omega_.degree() != 2) throw PreconditionError("BSymplecticStructure: omega must have degree 2");
    if (!(omega_.chart() == chart_)) throw PreconditionError("BSymplecticStructure: chart mismatch");

    constant_ = true;
    for (const auto& [idx, c] : omega_.terms())
        if (!c.is_constant()) { constant_ = false; break; }

    if (constant_) {
        Point origin(static_cast<size_t>(chart_.dim()), 0.0);
        omega_const_ = omega_matrix(origin);
        const double det = omega_const_.determinant();
        if (std::abs(det) <= opt.det_tol)
            throw NumericsError("BSymplecticStructure: constant coefficient matrix is singular");
        omega_const_inv_ = omega_const_.inverse();
    }
    check_nondegenerate(opt);
}

Eigen::MatrixXd BSymplecticStructure::omega_matrix(const Point& p) const {
    const int n = chart_.dim();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    Expr::Cache cache;
    for (const auto& [idx, c] : omega_.terms()) {
        const double v = c.eval(p, cache);
        m(idx[0], idx[1]) = v;
        m(idx[1], idx[0]) = -v;
    }
    return m;
}

void BSymplecticStructure::check_nondegenerate(const Options& opt) {
    SamplePlan plan(chart_, opt.seed);
    std::vector<Point> pts = plan.take(opt.samples);
    if (chart_.has_z()) {
        auto zs = plan.take_on_z(opt.z_samples);
        pts.insert(pts.end(), zs.begin(), zs.end());
    }
    double max_norm = 1.0;
    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(pts.size());
    for (const Point& p : pts) {
        mats.push_back(omega_matrix(p));
        max_norm = std::max(max_norm, mats.back().cwiseAbs().maxCoeff());
    }
    const double tol = opt.det_tol * std::pow(max_norm, chart_.dim());
    for (size_t i = 0; i < pts.size(); ++i) {
        if (std::abs(mats[i].determinant()) <= tol)
            throw NumericsError("BSymplecticStructure: omega degenerate (b-frame) at " +
                                chart_.describe_point(pts[i]));
    }
    if (chart_.has_z()) {
        double row0 = 0.0;
        for (const Point& p : plan.take_on_z(opt.z_samples))
            row0 = std::max(row0, omega_matrix(p).row(0).cwiseAbs().maxCoeff());
        critical_z_ = row0 > 1e-8;
    }
}

const std::vector<std::vector<Expr>>& BSymplecticStructure::adjugate() const {
    if (!adj_) {
        const auto m = omega_expr_matrix(chart_, omega_);
        SymbolicDet sd(m);
        const size_t n = static_cast<size_t>(chart_.dim());
        std::vector<std::vector<Expr>> adj(n, std::vector<Expr>(n));
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                adj[i][j] = sd.adjugate(static_cast<int>(i), static_cast<int>(j));
        det_ = sd.full_det();
        adj_ = std::move(adj);
    }
    return *adj_;
}

const Expr& BSymplecticStructure::determinant_expr() const {
    adjugate();
    return *det_;
}

BVectorField BSymplecticStructure::hamiltonian_field(const BFunction& f) const {
    const BForm df = b_differential(chart_, f);
    const int n = chart_.dim();
    std::vector<Expr> rhs(static_cast<size_t>(n), Expr::constant(0.0));
    for (const auto& [idx, c] : df.terms()) rhs[static_cast<size_t>(idx[0])] = c;

    std::vector<Expr> v(static_cast<size_t>(n), Expr::constant(0.0));
    if (constant_) {
        for (int s = 0; s < n; ++s) {
            Expr acc = Expr::constant(0.0);
            for (int j = 0; j < n; ++j) {
                const double w = omega_const_inv_(s, j);
                if (w != 0.0 && !rhs[static_cast<size_t>(j)].is_zero())
                    acc = acc + Expr::constant(w) * rhs[static_cast<size_t>(j)];
            }
            v[static_cast<size_t>(s)] = acc;
        }
    } else {
        const auto& adj = adjugate();
        const Expr inv_det = Expr::pow(determinant_expr(), -1.0);
        for (int s = 0; s < n; ++s) {
            Expr acc = Expr::constant(0.0);
            for (int j = 0; j < n; ++j) {
                const Expr& a = adj[static_cast<size_t>(s)][static_cast<size_t>(j)];
                if (!a.is_zero() && !rhs[static_cast<size_t>(j)].is_zero())
                    acc = acc + Expr::mul(a, rhs[static_cast<size_t>(j)]);
            }
            v[static_cast<size_t>(s)] = Expr::mul(acc, inv_det);
        }
    }
    return BVectorField(chart_, std::move(v));
}

SmoothField BSymplecticStructure::poisson_bracket(const BFunction& f, const BFunction& g) const {
    const BVectorField xf = hamiltonian_field(f);
    const BVectorField xg = hamiltonian_field(g);
    Expr acc = Expr::constant(0.0);
    for (const auto& [idx, c] : omega_.terms()) {
        const Expr& fa = xf.coeff(idx[0]);
        const Expr& fb = xf.coeff(idx[1]);
        const Expr& ga = xg.coeff(idx[0]);
        const Expr& gb = xg.coeff(idx[1]);
        Expr cross = Expr::mul(fa, gb) - Expr::mul(fb, ga);
        if (!cross.is_zero()) acc = acc + Expr::mul(c, cross);
    }
    return acc;
}

double BSymplecticStructure::jacobi_residual(const BFunction& f, const BFunction& g,
                                             const BFunction& h,
                                             const std::vector<Point>& points) const {
    const BFunction fg(poisson_bracket(f, g));
    const BFunction gh(poisson_bracket(g, h));
    const BFunction hf(poisson_bracket(h, f));
    const Expr cyc = poisson_bracket(fg, h) + poisson_bracket(gh, f) + poisson_bracket(hf, g);
    double worst = 0.0;
    for (const Point& p : points) worst = std::max(worst, std::abs(cyc.eval(p)));
    return worst;
}

ResidueSplit residue_split(const BForm& omega) {
    const Chart& chart = omega.chart();
    const int k = omega.degree();
    BForm residue(chart, std::max(k - 1, 0));
    BForm smooth(chart, k);
    for (const auto& [idx, c] : omega.terms()) {
        if (chart.has_z() && !idx.empty() && idx[0] == 0) {
            MultiIndex rest(idx.begin() + 1, idx.end());
            residue.add_term(std::move(rest),
                             chart.has_z() ? c.substitute(chart.t_index(), 0.0) : c);
        } else {
            smooth.add_term(idx, c);
        }
    }
    return {std::move(residue), std::move(smooth)};
}

nlohmann::json StructureReport::to_json() const {
    return nlohmann::json{{"check", "b_symplectic"},
                          {"points_tested", points_tested},
                          {"max_residual", closedness_residual},
                          {"closed", closed},
                          {"nondegenerate", nondegenerate},
                          {"min_abs_det", min_abs_det},
                          {"z_critical", z_critical},
                          {"symplectic_fallback", symplectic_fallback},
                          {"pass", pass}};
}

StructureReport verify_bsymplectic(const Chart& chart, const BForm& omega, int samples,
                                   std::uint64_t seed, double det_tol) {
    StructureReport rep;
    SamplePlan plan(chart, seed);
    std::vector<Point> pts = plan.take(samples);
    std::vector<Point> zpts;
    if (chart.has_z()) {
        zpts = plan.take_on_z(std::max(samples / 2, 8));
        pts.insert(pts.end(), zpts.begin(), zpts.end());
    }
    rep.points_tested = static_cast<int>(pts.size());

    // closedness
    if (omega.degree() < chart.dim()) {
        const BForm dw = exterior_d(omega);
        for (const Point& p : pts) {
            Expr::Cache cache;
            for (const auto& [idx, c] : dw.terms())
                rep.closedness_residual =
                    std::max(rep.closedness_residual, std::abs(c.eval(p, cache)));
        }
    }
    rep.closed = rep.closedness_residual < 1e-10;

    // criticality of Z: dt/t row of Omega not identically zero on Z
    double row0 = 0.0;
    if (chart.has_z()) {
        for (const Point& p : zpts) {
            Expr::Cache cache;
            for (const auto& [idx, c] : omega.terms())
                if (idx[0] == 0) row0 = std::max(row0, std::abs(c.eval(p, cache)));
        }
    }
    rep.z_critical = row0 > 1e-8;

    auto matrix_at = [&](const Point& p) {
        const int n = chart.dim();
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        Expr::Cache cache;
        for (const auto& [idx, c] : omega.terms()) {
            const double v = c.eval(p, cache);
            m(idx[0], idx[1]) = v;
            m(idx[1], idx[0]) = -v;
        }
        return m;
    };

    double max_norm = 1.0;
    std::vector<Eigen::MatrixXd> mats;
    for (const Point& p : pts) {
        mats.push_back(matrix_at(p));
        max_norm = std::max(max_norm, mats.back().cwiseAbs().maxCoeff());
    }

    if (!chart.has_z() || rep.z_critical) {
        rep.min_abs_det = std::numeric_limits<double>::infinity();
        for (const auto& m : mats) rep.min_abs_det = std::min(rep.min_abs_det, std::abs(m.determinant()));
        rep.nondegenerate = rep.min_abs_det > det_tol * std::pow(max_norm, chart.dim());
        rep.symplectic_fallback = !chart.has_z();
    } else {
        // dt/t row vanishes on Z: reinterpret as a smooth form. The dt ^ dx_j
        // coefficient is (slot-0 coefficient)/t, extended over Z by the exact
        // t-derivative of the coefficient.
        const int ti = chart.t_index();
        rep.symplectic_fallback = true;
        rep.min_abs_det = std::numeric_limits<double>::infinity();
        for (const Point& p : pts) {
            const int n = chart.dim();
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
            Expr::Cache cache;
            const double t = chart.t_value(p);
            for (const auto& [idx, c] : omega.terms()) {
                double v;
                if (idx[0] == 0)
                    v = (t != 0.0) ? c.eval(p, cache) / t
                                   : c.derivative(ti).eval(p, cache);
                else
                    v = c.eval(p, cache);
                m(idx[0], idx[1]) = v;
                m(idx[1], idx[0]) = -v;
            }
            rep.min_abs_det = std::min(rep.min_abs_det, std::abs(m.determinant()));
        }
        double smooth_norm = std::max(max_norm, 1.0);
        rep.nondegenerate = rep.min_abs_det > det_tol * std::pow(smooth_norm, chart.dim());
    }

    rep.pass = rep.closed && rep.nondegenerate;
    return rep;
}

} // namespace bsym
