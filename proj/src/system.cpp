#include "bsym/system.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "bsym/errors.hpp"

namespace bsym {

NCBSystem::NCBSystem(BSymplecticStructure structure, std::vector<BFunction> integrals, int rank)
    : structure_(std::move(structure)), integrals_(std::move(integrals)), rank_(rank) {
    const int s = static_cast<int>(integrals_.size());
    if (rank_ < 0 || rank_ > s) throw PreconditionError("NCBSystem: rank out of range");
    if (rank_ + s != chart().dim())
        throw PreconditionError("NCBSystem: condition (3) violated, r + s != dim");
    if (rank_ >= 1) {
        for (int j = rank_; j < s; ++j)
            if (integrals_[static_cast<size_t>(j)].c() != 0.0)
                throw PreconditionError("NCBSystem: non-commuting integral with singular part");
    }
    for (const BFunction& f : integrals_)
        if (f.c() != 0.0 && !chart().has_z())
            throw PreconditionError("NCBSystem: singular integral on a chart without Z");
}

const std::vector<BVectorField>& NCBSystem::commuting_fields() const {
    if (!fields_) {
        std::vector<BVectorField> v;
        v.reserve(static_cast<size_t>(rank_));
        for (int i = 0; i < rank_; ++i)
            v.push_back(structure_.hamiltonian_field(integrals_[static_cast<size_t>(i)]));
        fields_ = std::move(v);
    }
    return *fields_;
}

const ConditionReport& SystemReport::condition(int id) const {
    for (const auto& c : conditions)
        if (c.id == id) return c;
    throw PreconditionError("SystemReport: no such condition");
}

nlohmann::json SystemReport::to_json(const Chart& chart) const {
    nlohmann::json jc = nlohmann::json::array();
    for (const auto& c : conditions) {
        nlohmann::json e{{"condition", c.id}, {"pass", c.pass}, {"metric", c.metric},
                         {"detail", c.detail}};
        if (c.witness) e["witness"] = *c.witness;
        jc.push_back(std::move(e));
    }
    return nlohmann::json{{"check", "def_3_1"}, {"chart", chart.to_json()},
                          {"conditions", jc}, {"pass", pass}};
}

namespace {

Eigen::MatrixXd differentials_matrix(const NCBSystem& sys, const Point& p) {
    const int s = sys.size();
    const int n = sys.chart().dim();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(s, n);
    for (int i = 0; i < s; ++i) {
        const BForm df = b_differential(sys.chart(), sys.integral(i));
        Expr::Cache cache;
        for (const auto& [idx, c] : df.terms()) m(i, idx[0]) = c.eval(p, cache);
    }
    return m;
}

int numeric_rank(const Eigen::MatrixXd& m, double tol) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    int r = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > tol) ++r;
    return r;
}

} // namespace

SystemReport verify_system(const NCBSystem& sys, const VerifyOptions& opt) {
    SystemReport rep;
    const Chart& chart = sys.chart();
    const int s = sys.size();
    const int r = sys.rank();
    SamplePlan plan(chart, opt.seed);
    const std::vector<Point> m_pts = plan.take(opt.samples);
    const std::vector<Point> z_pts =
        chart.has_z() ? plan.take_on_z(opt.z_samples) : plan.take(opt.z_samples);

    // (1) independence of the b-differentials on dense samples of M and Z
    {
        auto full_fraction = [&](const std::vector<Point>& pts, Point& first_failure, bool& failed) {
            int full = 0;
            for (const Point& p : pts) {
                if (numeric_rank(differentials_matrix(sys, p), opt.rank_tol) == s) {
                    ++full;
                } else if (!failed) {
                    failed = true;
                    first_failure = p;
                }
            }
            return pts.empty() ? 1.0 : static_cast<double>(full) / static_cast<double>(pts.size());
        };
        ConditionReport c;
        c.id = 1;
        Point fail_at;
        bool failed = false;
        const double fm = full_fraction(m_pts, fail_at, failed);
        const double fz = full_fraction(z_pts, fail_at, failed);
        c.metric = std::min(fm, fz);
        c.pass = fm >= opt.dense_fraction && fz >= opt.dense_fraction;
        c.detail = "rank-" + std::to_string(s) + " fraction: M " + std::to_string(fm) +
                   ", Z " + std::to_string(fz);
        if (failed && !c.pass) {
            c.witness = fail_at;
            c.detail += "; first drop at " + chart.describe_point(fail_at);
        }
        rep.conditions.push_back(std::move(c));
    }

    // (2) involution of the commuting part with everything
    {
        ConditionReport c;
        c.id = 2;
        double worst = 0.0;
        int wi = -1, wj = -1;
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < s; ++j) {
                if (j == i) continue;
                const Expr br = sys.structure().poisson_bracket(sys.integral(i), sys.integral(j));
                for (const Point& p : m_pts) {
                    const double v = std::abs(br.eval(p));
                    if (v > worst) { worst = v; wi = i; wj = j; }
                }
            }
        }
        c.metric = worst;
        c.pass = worst < opt.involution_tol;
        c.detail = r == 0 ? "rank 0: vacuous"
                          : "max |{f_i, f_j}| = " + std::to_string(worst) +
                                (wi >= 0 ? " at (i,j)=(" + std::to_string(wi + 1) + "," +
                                               std::to_string(wj + 1) + ")"
                                         : "");
        rep.conditions.push_back(std::move(c));
    }

    // (3) r + s = dim (held by construction; reported for completeness)
    {
        ConditionReport c;
        c.id = 3;
        c.pass = (r + s == chart.dim());
        c.metric = static_cast<double>(r + s - chart.dim());
        c.detail = "r + s = " + std::to_string(r + s) + ", dim = " + std::to_string(chart.dim());
        rep.conditions.push_back(std::move(c));
    }

    // (4) commuting fields independent as smooth fields somewhere on Z
    {
        ConditionReport c;
        c.id = 4;
        if (r == 0) {
            c.pass = true;
            c.detail = "rank 0: vacuous";
        } else {
            const auto& fields = sys.commuting_fields();
            double best = 0.0;
            double max_norm = 0.0;
            Point best_p;
            for (const Point& p : z_pts) {
                Eigen::MatrixXd m(r, chart.dim());
                for (int i = 0; i < r; ++i) {
                    const auto vel = fields[static_cast<size_t>(i)].eval_smooth(p);
                    for (int k = 0; k < chart.dim(); ++k) m(i, k) = vel[static_cast<size_t>(k)];
                }
                max_norm = std::max(max_norm, m.cwiseAbs().maxCoeff());
                Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
                const double sigma_r = svd.singularValues()(r - 1);
                if (sigma_r > best) { best = sigma_r; best_p = p; }
            }
            c.metric = best;
            c.pass = best > opt.rank_tol;
            if (c.pass) {
                c.witness = best_p;
                c.detail = "sigma_r = " + std::to_string(best) + " at witness";
            } else {
                c.detail = "fields dependent as smooth fields on all sampled Z points";
                if (max_norm < 1e-12)
                    c.detail += "; smooth fields vanish on Z (max |component| = " +
                                std::to_string(max_norm) + ")";
            }
        }
        rep.conditions.push_back(std::move(c));
    }

    rep.pass = std::all_of(rep.conditions.begin(), rep.conditions.end(),
                           [](const ConditionReport& c) { return c.pass; });
    return rep;
}

NormalFormResult normal_form(const NCBSystem& sys) {
    const int s = sys.size();
    const int r = sys.rank();
    const Chart& chart = sys.chart();
    if (!chart.has_z())
        throw NumericsError("normal_form: no b-integral (chart has no critical hypersurface)");

    int pivot = -1;
    for (int i = 0; i < std::max(r, 1) && i < s; ++i)
        if (sys.integral(i).c() != 0.0) { pivot = i; break; }
    if (pivot < 0)
        throw NumericsError(
            "normal_form: no b-integral in the commuting part; such a system cannot satisfy "
            "Def. 3.1 (the level sets of (f_1..f_s, t) would be (r-1)-dimensional yet carry r "
            "independent tangent fields)");

    std::vector<int> order(static_cast<size_t>(s));
    std::iota(order.begin(), order.end(), 0);
    std::swap(order[0], order[static_cast<size_t>(pivot)]);

    std::vector<BFunction> f;
    f.reserve(static_cast<size_t>(s));
    for (int i = 0; i < s; ++i) f.push_back(sys.integral(order[static_cast<size_t>(i)]));

    const double c = f[0].c();
    const Expr g = f[0].g();
    const Expr t_coord = Expr::coord(chart.t_index());

    const bool normal_already = pivot == 0 && c == 1.0 && g.is_zero() &&
                                std::all_of(f.begin() + 1, f.end(),
                                            [](const BFunction& fj) { return fj.is_smooth(); });
    if (normal_already) {
        NormalFormResult res{sys, t_coord, Eigen::MatrixXd::Identity(s, s), order, true};
        return res;
    }

    Eigen::MatrixXd map = Eigen::MatrixXd::Identity(s, s);
    map(0, 0) = 1.0 / c;

    BFunction f1_new(1.0, g / c);
    std::vector<BFunction> out;
    out.reserve(static_cast<size_t>(s));
    out.push_back(f1_new);
    for (int j = 1; j < s; ++j) {
        const BFunction& fj = f[static_cast<size_t>(j)];
        if (fj.c() != 0.0) {
            out.push_back(fj - fj.c() * f1_new);
            map(j, 0) = -fj.c() / c;
        } else {
            out.push_back(fj);
        }
    }

    // t := e^{g/c} t', so that log|t| = g/c + log|t'| = f_1 identically
    Expr t_new = g.is_zero() ? t_coord : Expr::mul(Expr::exp(g / c), t_coord);

    NCBSystem out_sys(sys.structure(), std::move(out), r);
    return NormalFormResult{std::move(out_sys), std::move(t_new), std::move(map), std::move(order),
                            false};
}

nlohmann::json TargetBracketTable::to_json() const {
    nlohmann::json jp = nlohmann::json::array();
    for (const Point& p : points) jp.push_back(p);
    return nlohmann::json{{"points", jp}, {"values", values}, {"f_basic", f_basic}};
}

TargetBracketTable induced_target_bracket(const NCBSystem& sys, const std::vector<Point>& points,
                                          std::uint64_t seed, double basic_tol) {
    const int s = sys.size();
    const Chart& chart = sys.chart();
    TargetBracketTable table;
    table.points = points;
    table.values.assign(static_cast<size_t>(s),
                        std::vector<std::vector<double>>(
                            static_cast<size_t>(s), std::vector<double>(points.size(), 0.0)));
    table.f_basic.assign(static_cast<size_t>(s), std::vector<bool>(static_cast<size_t>(s), true));

    // coordinates no integral depends on can be re-randomized for free F-pairs
    std::set<int> used;
    for (const BFunction& fi : sys.integrals()) {
        fi.g().collect_coords(used);
        if (fi.c() != 0.0 && chart.has_z()) used.insert(chart.t_index());
    }
    std::vector<int> free_coords;
    for (int i = 0; i < chart.dim(); ++i)
        if (!used.contains(i)) free_coords.push_back(i);

    SamplePlan plan(chart, seed + 77);
    std::vector<Point> partners;
    if (!free_coords.empty()) {
        partners.reserve(points.size());
        for (const Point& p : points) {
            Point q = p;
            const Point fresh = plan.next();
            for (int i : free_coords) q[static_cast<size_t>(i)] = fresh[static_cast<size_t>(i)];
            partners.push_back(std::move(q));
        }
    }

    for (int i = 0; i < s; ++i) {
        for (int j = i + 1; j < s; ++j) {
            const Expr br = sys.structure().poisson_bracket(sys.integral(i), sys.integral(j));
            for (size_t k = 0; k < points.size(); ++k) {
                const double v = br.eval(points[k]);
                table.values[static_cast<size_t>(i)][static_cast<size_t>(j)][k] = v;
                table.values[static_cast<size_t>(j)][static_cast<size_t>(i)][k] = -v;
            }
            bool basic = true;
            double worst = 0.0;
            if (!partners.empty()) {
                for (size_t k = 0; k < points.size(); ++k) {
                    const double dv = std::abs(br.eval(partners[k]) -
                                               table.values[static_cast<size_t>(i)][static_cast<size_t>(j)][k]);
                    worst = std::max(worst, dv);
                }
                basic = worst < basic_tol;
            } else {
                // nearest-neighbor matching on F-values among the samples
                std::vector<std::vector<double>> fvals(points.size());
                for (size_t k = 0; k < points.size(); ++k) {
                    fvals[k].reserve(static_cast<size_t>(s));
                    for (int q = 0; q < s; ++q)
                        fvals[k].push_back(sys.integral(q).eval(chart, points[k]));
                }
                for (size_t a = 0; a < points.size(); ++a) {
                    for (size_t b = a + 1; b < points.size(); ++b) {
                        double df = 0.0;
                        for (int q = 0; q < s; ++q)
                            df = std::max(df, std::abs(fvals[a][static_cast<size_t>(q)] -
                                                       fvals[b][static_cast<size_t>(q)]));
                        if (df < 1e-9) {
                            const double dv =
                                std::abs(table.values[static_cast<size_t>(i)][static_cast<size_t>(j)][a] -
                                         table.values[static_cast<size_t>(i)][static_cast<size_t>(j)][b]);
                            worst = std::max(worst, dv);
                        }
                    }
                }
                basic = worst < basic_tol;
            }
            if (!basic)
                throw NumericsError("induced_target_bracket: entry (" + std::to_string(i + 1) +
                                    "," + std::to_string(j + 1) +
                                    ") is not F-basic (spread " + std::to_string(worst) + ")");
            table.f_basic[static_cast<size_t>(i)][static_cast<size_t>(j)] = basic;
            table.f_basic[static_cast<size_t>(j)][static_cast<size_t>(i)] = basic;
        }
    }
    return table;
}

CasBasicReport is_cas_basic(const NCBSystem& sys, const BFunction& h,
                            const std::vector<Point>& points, double tol) {
    CasBasicReport rep;
    for (int j = 0; j < sys.size(); ++j) {
        const Expr br = sys.structure().poisson_bracket(h, sys.integral(j));
        for (const Point& p : points) {
            const double v = std::abs(br.eval(p));
            if (v > rep.max_bracket) { rep.max_bracket = v; rep.worst_integral = j; }
        }
    }
    rep.cas_basic = rep.max_bracket < tol;
    return rep;
}

CasBasicReport is_cas_basic(const NCBSystem& sys, const ScalarFn& h,
                            const std::vector<Point>& points, double tol, double fd_step) {
    CasBasicReport rep;
    const Chart& chart = sys.chart();
    for (int j = 0; j < sys.size(); ++j) {
        const BVectorField xj = sys.structure().hamiltonian_field(sys.integral(j));
        for (const Point& p : points) {
            const auto vel = xj.eval_smooth(p);
            double norm = 0.0;
            for (double v : vel) norm = std::max(norm, std::abs(v));
            if (norm == 0.0) continue;
            Point a = p, b = p;
            for (size_t k = 0; k < vel.size(); ++k) {
                a[k] += fd_step * vel[k];
                b[k] -= fd_step * vel[k];
            }
            // {h, f_j} = -X_{f_j}(h)
            const double v = std::abs((h(chart.wrap(a)) - h(chart.wrap(b))) / (2.0 * fd_step));
            if (v > rep.max_bracket) { rep.max_bracket = v; rep.worst_integral = j; }
        }
    }
    rep.cas_basic = rep.max_bracket < tol;
    return rep;
}

} // namespace bsym
