#include "bsym/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <nlohmann/json.hpp>

#include "bsym/errors.hpp"

namespace bsym {

VectorFieldFn smooth_velocity(const BVectorField& X) {
    return [X](const Point& p) { return X.eval_smooth(p); };
}

OdeRhs field_rhs(const Chart& chart, const VectorFieldFn& v) {
    return [chart, v](const std::vector<double>& y, std::vector<double>& dydt) {
        const Point w = chart.wrap(y);
        if (!chart.contains(w, 0.05))
            throw DomainError("flow left the chart domain at " + chart.describe_point(w));
        dydt = v(w);
    };
}

Trajectory flow(const BSymplecticStructure& S, const BFunction& f, const Point& p0, double time,
                const OdeOptions& opt) {
    const BVectorField xf = S.hamiltonian_field(f);
    Trajectory traj;
    const auto observe = [&traj](double t, const std::vector<double>& y) {
        traj.times.push_back(t);
        traj.states.push_back(y);
    };
    integrate(field_rhs(S.chart(), smooth_velocity(xf)), p0, time, opt, observe);
    return traj;
}

Point flow_to(const Chart& chart, const VectorFieldFn& v, Point p0, double time,
              const OdeOptions& opt) {
    return integrate(field_rhs(chart, v), std::move(p0), time, opt);
}

Point joint_flow(const Chart& chart, const std::vector<VectorFieldFn>& fields, Point p0,
                 const std::vector<double>& s, const OdeOptions& opt) {
    if (fields.size() != s.size()) throw PreconditionError("joint_flow: size mismatch");
    // rightmost factor acts first
    for (size_t j = fields.size(); j-- > 0;) {
        if (s[j] != 0.0) p0 = flow_to(chart, fields[j], std::move(p0), s[j], opt);
    }
    return p0;
}

void Trajectory::write_csv(std::ostream& os, const Chart& chart) const {
    os << "t_sim";
    for (const auto& n : chart.names()) os << "," << n;
    os << "\n";
    char buf[32];
    for (size_t i = 0; i < times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", times[i]);
        os << buf;
        for (double v : states[i]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << "," << buf;
        }
        os << "\n";
    }
}

nlohmann::json PeriodLatticeBasis::to_json() const {
    nlohmann::json jbasis = nlohmann::json::array();
    for (int i = 0; i < basis.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < basis.cols(); ++j) row.push_back(basis(i, j));
        jbasis.push_back(std::move(row));
    }
    return nlohmann::json{{"base_point", base_point},
                          {"basis", jbasis},
                          {"residuals", residuals},
                          {"modular_period", modular_period}};
}

namespace {

double wrapped_norm(const Chart& chart, const Point& a, const Point& b) {
    double acc = 0.0;
    for (double d : chart.wrapped_delta(a, b)) acc += d * d;
    return std::sqrt(acc);
}

struct ReturnCandidate {
    Eigen::VectorXd s;
    double dist;
};

// Grid scan of the joint-flow return distance by marching along each field
// axis; cost is linear in the number of grid nodes.
std::vector<ReturnCandidate> scan_returns(const Chart& chart,
                                          const std::vector<VectorFieldFn>& fields,
                                          const Point& p0, double span, double step,
                                          double accept, const OdeOptions& ode) {
    const int r = static_cast<int>(fields.size());
    const int m = static_cast<int>(std::ceil(span / step));
    const int g = 2 * m + 1;

    struct Node {
        std::vector<int> k;   // per-axis step counts, offset by +m
        Point state;
    };
    std::vector<Node> nodes{{std::vector<int>{}, p0}};
    for (int j = r - 1; j >= 0; --j) {
        std::vector<Node> next;
        next.reserve(nodes.size() * static_cast<size_t>(g));
        for (const Node& nd : nodes) {
            auto push = [&](int k, const Point& st) {
                std::vector<int> kk;
                kk.reserve(nd.k.size() + 1);
                kk.push_back(k + m);
                kk.insert(kk.end(), nd.k.begin(), nd.k.end());
                next.push_back({std::move(kk), st});
            };
            push(0, nd.state);
            Point cur = nd.state;
            for (int k = 1; k <= m; ++k) {
                cur = flow_to(chart, fields[static_cast<size_t>(j)], std::move(cur), step, ode);
                push(k, cur);
            }
            cur = nd.state;
            for (int k = 1; k <= m; ++k) {
                cur = flow_to(chart, fields[static_cast<size_t>(j)], std::move(cur), -step, ode);
                push(-k, cur);
            }
        }
        nodes = std::move(next);
    }

    // distances on the full grid
    std::vector<double> dist(nodes.size());
    std::vector<long> flat(nodes.size());
    std::vector<long> strides(static_cast<size_t>(r));
    long stride = 1;
    for (int j = r - 1; j >= 0; --j) {
        strides[static_cast<size_t>(j)] = stride;
        stride *= g;
    }
    std::vector<double> grid_dist(static_cast<size_t>(stride),
                                  std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < nodes.size(); ++i) {
        long f = 0;
        for (int j = 0; j < r; ++j) f += strides[static_cast<size_t>(j)] * nodes[i].k[static_cast<size_t>(j)];
        flat[i] = f;
        dist[i] = wrapped_norm(chart, nodes[i].state, p0);
        grid_dist[static_cast<size_t>(f)] = dist[i];
    }

    std::vector<ReturnCandidate> out;
    for (size_t i = 0; i < nodes.size(); ++i) {
        if (dist[i] >= accept) continue;
        double smax = 0.0;
        for (int j = 0; j < r; ++j)
            smax = std::max(smax, std::abs(nodes[i].k[static_cast<size_t>(j)] - m) * step);
        if (smax < 0.75 * step) continue;   // the trivial return at s = 0
        bool is_min = true;
        for (int j = 0; j < r && is_min; ++j) {
            const int kj = nodes[i].k[static_cast<size_t>(j)];
            for (int d : {-1, 1}) {
                const int nk = kj + d;
                if (nk < 0 || nk >= g) continue;
                const long nf = flat[i] + d * strides[static_cast<size_t>(j)];
                if (grid_dist[static_cast<size_t>(nf)] < dist[i]) { is_min = false; break; }
            }
        }
        if (!is_min) continue;
        Eigen::VectorXd s(r);
        for (int j = 0; j < r; ++j) s(j) = (nodes[i].k[static_cast<size_t>(j)] - m) * step;
        out.push_back({std::move(s), dist[i]});
    }
    return out;
}

struct RefineResult {
    Eigen::VectorXd s;
    double residual;
    bool ok;
};

RefineResult refine_return(const Chart& chart, const std::vector<VectorFieldFn>& fields,
                           const Point& p0, Eigen::VectorXd s, double tol,
                           const OdeOptions& ode) {
    const int r = static_cast<int>(fields.size());
    const int n = chart.dim();
    const double h = 1e-6;   // finite-difference monodromy step
    double res = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 25; ++iter) {
        std::vector<double> sv(s.data(), s.data() + r);
        Point q;
        try {
            q = joint_flow(chart, fields, p0, sv, ode);
        } catch (const DomainError&) {
            return {s, res, false};
        }
        const auto delta = chart.wrapped_delta(q, p0);
        Eigen::VectorXd G(n);
        for (int i = 0; i < n; ++i) G(i) = delta[static_cast<size_t>(i)];
        res = G.norm();
        if (res < tol) return {s, res, true};

        Eigen::MatrixXd J(n, r);
        for (int j = 0; j < r; ++j) {
            const Point qj = flow_to(chart, fields[static_cast<size_t>(j)], q, h, ode);
            for (int i = 0; i < n; ++i) J(i, j) = (qj[static_cast<size_t>(i)] - q[static_cast<size_t>(i)]) / h;
        }
        const Eigen::VectorXd step = J.colPivHouseholderQr().solve(-G);
        if (!step.allFinite() || step.norm() > 10.0) return {s, res, false};
        s += step;
        if (step.norm() < 1e-14) break;
    }
    return {s, res, res < tol};
}

// Greedy basis extraction with pairwise size reduction.
std::vector<Eigen::VectorXd> lattice_basis_from_returns(std::vector<Eigen::VectorXd> vs, int r) {
    std::sort(vs.begin(), vs.end(),
              [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.norm() < b.norm(); });
    std::vector<Eigen::VectorXd> basis;
    for (const auto& v0 : vs) {
        Eigen::VectorXd v = v0;
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& b : basis) {
                const double c = v.dot(b) / b.squaredNorm();
                const double k = std::round(c);
                if (k != 0.0) {
                    v -= k * b;
                    changed = true;
                }
            }
        }
        if (v.norm() > 1e-5 && static_cast<int>(basis.size()) < r) {
            basis.push_back(v);
            // re-reduce existing rows against the newcomer
            for (auto& b : basis) {
                if (&b == &basis.back()) continue;
                const double k = std::round(b.dot(basis.back()) / basis.back().squaredNorm());
                if (k != 0.0) b -= k * basis.back();
            }
            std::sort(basis.begin(), basis.end(),
                      [](const Eigen::VectorXd& a, const Eigen::VectorXd& c) {
                          return a.norm() < c.norm();
                      });
        }
        if (static_cast<int>(basis.size()) == r) break;
    }
    return basis;
}

// Gauge fixing: lambda_1 is the row with the dominant first component,
// lambda_i^1 is reduced mod lambda_1^1 by integer operations for i > 1,
// lambda_1^1 made positive, the tail rows ordered by pivot position with a
// positive pivot.
Eigen::MatrixXd normalize_basis(Eigen::MatrixXd b) {
    const int r = static_cast<int>(b.rows());
    int lead = 0;
    for (int i = 1; i < r; ++i)
        if (std::abs(b(i, 0)) > std::abs(b(lead, 0))) lead = i;
    b.row(0).swap(b.row(lead));
    if (std::abs(b(0, 0)) > 1e-12) {
        for (int i = 1; i < r; ++i) {
            const double k = std::round(b(i, 0) / b(0, 0));
            if (k != 0.0) b.row(i) -= k * b.row(0);
        }
        if (b(0, 0) < 0.0) b.row(0) = -b.row(0);
        // reduce lambda_1's tail against the other rows
        for (int i = 1; i < r; ++i) {
            int piv = 0;
            b.row(i).cwiseAbs().maxCoeff(&piv);
            if (std::abs(b(i, piv)) < 1e-12) continue;
            const double k = std::round(b(0, piv) / b(i, piv));
            if (k != 0.0) b.row(0) -= k * b.row(i);
        }
        if (b(0, 0) < 0.0) b.row(0) = -b.row(0);
    }
    // order the remaining rows by pivot column, pivot positive
    std::vector<int> rows(static_cast<size_t>(r > 1 ? r - 1 : 0));
    for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i) + 1;
    std::sort(rows.begin(), rows.end(), [&](int i, int j) {
        int pi = 0, pj = 0;
        b.row(i).cwiseAbs().maxCoeff(&pi);
        b.row(j).cwiseAbs().maxCoeff(&pj);
        return pi < pj;
    });
    Eigen::MatrixXd out = b;
    for (size_t i = 0; i < rows.size(); ++i) {
        Eigen::RowVectorXd row = b.row(rows[i]);
        int piv = 0;
        row.cwiseAbs().maxCoeff(&piv);
        if (row(piv) < 0.0) row = -row;
        out.row(static_cast<int>(i) + 1) = row;
    }
    return out;
}

} // namespace

PeriodLatticeBasis period_lattice(const NCBSystem& sys, const Point& p0,
                                  const LatticeOptions& opt) {
    const Chart& chart = sys.chart();
    const int r = sys.rank();
    if (r < 1) throw PreconditionError("period_lattice: rank must be >= 1");
    std::vector<VectorFieldFn> fields;
    for (const BVectorField& x : sys.commuting_fields()) fields.push_back(smooth_velocity(x));

    std::vector<Eigen::VectorXd> returns;
    if (opt.seed_basis) {
        for (int i = 0; i < r; ++i) {
            auto res = refine_return(chart, fields, p0, opt.seed_basis->row(i).transpose(),
                                     opt.residual_tol, opt.ode);
            if (res.ok) returns.push_back(res.s);
        }
    }

    double span = opt.scan_span;
    int doublings = 0;
    while (static_cast<int>(lattice_basis_from_returns(returns, r).size()) < r) {
        if (doublings++ > opt.max_span_doublings)
            throw NumericsError("period_lattice: no full-rank return set within the scan box");
        const auto cands = scan_returns(chart, fields, p0, span, opt.scan_step,
                                        opt.scan_accept, opt.scan_ode);
        for (const auto& c : cands) {
            auto res = refine_return(chart, fields, p0, c.s, opt.residual_tol, opt.ode);
            if (res.ok && res.s.norm() > 0.4 * opt.scan_step) {
                bool dup = false;
                for (const auto& v : returns)
                    if ((v - res.s).norm() < 1e-6) { dup = true; break; }
                if (!dup) returns.push_back(res.s);
            }
        }
        span *= 2.0;
    }

    auto rows = lattice_basis_from_returns(returns, r);
    Eigen::MatrixXd basis(r, r);
    for (int i = 0; i < r; ++i) basis.row(i) = rows[static_cast<size_t>(i)].transpose();
    basis = normalize_basis(std::move(basis));

    PeriodLatticeBasis out;
    out.base_point = p0;
    out.basis = basis;
    out.modular_period = std::abs(basis(0, 0));
    for (int i = 0; i < r; ++i) {
        std::vector<double> sv(static_cast<size_t>(r));
        for (int j = 0; j < r; ++j) sv[static_cast<size_t>(j)] = basis(i, j);
        const Point q = joint_flow(chart, fields, p0, sv, opt.ode);
        out.residuals.push_back(wrapped_norm(chart, q, p0));
        if (out.residuals.back() > 10 * opt.residual_tol)
            throw NumericsError("period_lattice: normalized basis row " + std::to_string(i + 1) +
                                " is not a return vector (residual " +
                                std::to_string(out.residuals.back()) + ")");
    }
    if (std::abs(basis.determinant()) < 1e-10)
        throw NumericsError("period_lattice: degenerate basis");
    return out;
}

LatticeField::LatticeField(std::vector<int> coords, std::vector<std::vector<double>> axes,
                           std::vector<Eigen::MatrixXd> values)
    : coords_(std::move(coords)), axes_(std::move(axes)), values_(std::move(values)) {
    long stride = 1;
    strides_.assign(coords_.size(), 1);
    for (size_t d = coords_.size(); d-- > 0;) {
        strides_[d] = stride;
        stride *= static_cast<long>(axes_[d].size());
    }
    if (stride != static_cast<long>(values_.size()))
        throw PreconditionError("LatticeField: node count mismatch");
}

const Eigen::MatrixXd& LatticeField::node(const std::vector<int>& idx) const {
    long f = 0;
    for (size_t d = 0; d < idx.size(); ++d) f += strides_[d] * idx[d];
    return values_[static_cast<size_t>(f)];
}

Eigen::MatrixXd LatticeField::eval(const Point& p) const {
    const size_t nd = coords_.size();
    std::vector<int> cell(nd, 0);
    std::vector<double> frac(nd, 0.0);
    for (size_t d = 0; d < nd; ++d) {
        const auto& ax = axes_[d];
        if (ax.size() == 1) continue;
        const double h = ax[1] - ax[0];
        double u = (p[static_cast<size_t>(coords_[d])] - ax[0]) / h;
        u = std::clamp(u, 0.0, static_cast<double>(ax.size() - 1));
        int i = static_cast<int>(std::floor(u));
        i = std::min(i, static_cast<int>(ax.size()) - 2);
        cell[d] = i;
        frac[d] = u - i;
    }

    // recursive tensor-product Catmull-Rom with linear ghost extrapolation
    std::function<Eigen::MatrixXd(size_t, std::vector<int>&)> rec =
        [&](size_t d, std::vector<int>& idx) -> Eigen::MatrixXd {
        if (d == nd) return node(idx);
        const int n = static_cast<int>(axes_[d].size());
        if (n == 1) {
            idx[d] = 0;
            return rec(d + 1, idx);
        }
        auto at = [&](int i) -> Eigen::MatrixXd {
            if (i < 0) {
                idx[d] = 0;
                Eigen::MatrixXd a = rec(d + 1, idx);
                idx[d] = 1;
                Eigen::MatrixXd b = rec(d + 1, idx);
                return 2.0 * a - b;
            }
            if (i >= n) {
                idx[d] = n - 1;
                Eigen::MatrixXd a = rec(d + 1, idx);
                idx[d] = n - 2;
                Eigen::MatrixXd b = rec(d + 1, idx);
                return 2.0 * a - b;
            }
            idx[d] = i;
            return rec(d + 1, idx);
        };
        const double u = frac[d];
        const int i = cell[d];
        if (n == 2) return (1.0 - u) * at(0) + u * at(1);
        const Eigen::MatrixXd p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
        return 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u +
                      (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
    };
    std::vector<int> idx(nd, 0);
    return rec(0, idx);
}

LatticeField build_lattice_field(const NCBSystem& sys, const LatticeGridSpec& spec,
                                 const LatticeOptions& opt) {
    const Chart& chart = sys.chart();
    const int r = sys.rank();

    // transverse coordinates: the non-periodic ones, in chart order; for
    // standard-model charts this is (t, a_2..a_r, p_1..q_l)
    std::vector<int> coords;
    for (int i = 0; i < chart.dim(); ++i)
        if (!chart.periodic_coord(i)) coords.push_back(i);

    std::vector<std::vector<double>> axes;
    for (size_t d = 0; d < coords.size(); ++d) {
        const Interval& iv = chart.box()[static_cast<size_t>(coords[d])];
        const double c = 0.5 * (iv.lo + iv.hi), half = 0.5 * (iv.hi - iv.lo) * (1.0 - spec.shrink);
        const int nodes = d < static_cast<size_t>(r) ? spec.nodes_scaled : spec.nodes_rest;
        axes.push_back(linspace(Interval{c - half, c + half}, nodes));
    }

    std::vector<long> strides(coords.size(), 1);
    long total = 1;
    for (size_t d = coords.size(); d-- > 0;) {
        strides[d] = total;
        total *= static_cast<long>(axes[d].size());
    }

    std::vector<Eigen::MatrixXd> values(static_cast<size_t>(total));
    for (long f = 0; f < total; ++f) {
        std::vector<int> idx(coords.size());
        long rem = f;
        for (size_t d = 0; d < coords.size(); ++d) {
            idx[d] = static_cast<int>(rem / strides[d]);
            rem %= strides[d];
        }
        Point p0(static_cast<size_t>(chart.dim()), 0.0);
        for (size_t d = 0; d < coords.size(); ++d)
            p0[static_cast<size_t>(coords[d])] = axes[d][static_cast<size_t>(idx[d])];

        LatticeOptions node_opt = opt;
        // continuation: seed from the already-computed neighbor along the
        // last axis with a nonzero index
        for (size_t d = coords.size(); d-- > 0;) {
            if (idx[d] > 0) {
                node_opt.seed_basis = values[static_cast<size_t>(f - strides[d])];
                break;
            }
        }
        values[static_cast<size_t>(f)] = period_lattice(sys, p0, node_opt).basis;
    }
    return LatticeField(std::move(coords), std::move(axes), std::move(values));
}

UniformizedAction uniformize(const NCBSystem& sys, const LatticeField& lambda) {
    const Chart& chart = sys.chart();
    const int r = sys.rank();
    if (lambda.rank() != r) throw PreconditionError("uniformize: lattice rank != system rank");

    // slot-0 coefficients of the df_j, to orient lambda_1 so that
    // iota_{Y_1} omega = +c d log|t| + ... with c > 0
    Point probe(static_cast<size_t>(chart.dim()), 0.0);
    if (chart.has_z()) probe[static_cast<size_t>(chart.t_index())] = 0.0;
    Eigen::VectorXd slot0(r);
    for (int j = 0; j < r; ++j) {
        const BForm df = b_differential(chart, sys.integral(j));
        slot0(j) = df.coeff({0}).eval(probe);
    }
    const Eigen::MatrixXd lam0 = lambda.eval(probe);
    const double c_rec = -lam0.row(0).dot(slot0);

    UniformizedAction out;
    out.lambda = lambda;
    out.gauge = Eigen::VectorXd::Ones(r);
    if (c_rec < 0.0) out.gauge(0) = -1.0;
    out.modular_period = std::abs(c_rec);

    std::vector<BVectorField> xf = sys.commuting_fields();
    for (int i = 0; i < r; ++i) {
        const double gi = out.gauge(i);
        out.fields.push_back([xf, lambda, i, gi](const Point& p) {
            const Eigen::MatrixXd lam = lambda.eval(p);
            std::vector<double> vel(p.size(), 0.0);
            for (size_t j = 0; j < xf.size(); ++j) {
                const double w = gi * lam(i, static_cast<int>(j));
                if (w == 0.0) continue;
                const auto vj = xf[j].eval_smooth(p);
                for (size_t k = 0; k < vel.size(); ++k) vel[k] += w * vj[k];
            }
            return vel;
        });
    }
    return out;
}

double unit_return_residual(const Chart& chart, const VectorFieldFn& Y, const Point& p0,
                            const OdeOptions& opt) {
    const Point q = flow_to(chart, Y, p0, 1.0, opt);
    return wrapped_norm(chart, q, p0);
}

double flow_order_residual(const Chart& chart, const VectorFieldFn& a, const VectorFieldFn& b,
                           const Point& p0, double s, const OdeOptions& opt) {
    const Point ab = flow_to(chart, a, flow_to(chart, b, p0, s, opt), s, opt);
    const Point ba = flow_to(chart, b, flow_to(chart, a, p0, s, opt), s, opt);
    return wrapped_norm(chart, ab, ba);
}

double conservation_drift(const NCBSystem& sys, const BFunction& f, const Point& p0, double time,
                          const OdeOptions& opt) {
    const Chart& chart = sys.chart();
    std::vector<const BFunction*> conserved;
    SamplePlan plan(chart, 23);
    const auto pts = plan.take(10);
    for (const BFunction& fj : sys.integrals()) {
        const Expr br = sys.structure().poisson_bracket(f, fj);
        double worst = 0.0;
        for (const Point& p : pts) worst = std::max(worst, std::abs(br.eval(p)));
        if (worst < 1e-10) conserved.push_back(&fj);
    }
    std::vector<double> ref;
    for (const BFunction* fj : conserved) {
        const double v = fj->eval(chart, chart.wrap(p0));
        ref.push_back(v);
    }
    double drift = 0.0;
    const BVectorField xf = sys.structure().hamiltonian_field(f);
    const auto observe = [&](double, const std::vector<double>& y) {
        const Point w = chart.wrap(y);
        for (size_t i = 0; i < conserved.size(); ++i) {
            if (!std::isfinite(ref[i])) continue;
            drift = std::max(drift, std::abs(conserved[i]->eval(chart, w) - ref[i]));
        }
    };
    integrate(field_rhs(chart, smooth_velocity(xf)), p0, time, opt, observe);
    return drift;
}

} // namespace bsym
