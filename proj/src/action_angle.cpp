#include "bsym/action_angle.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "bsym/errors.hpp"

namespace bsym {

Chart action_angle_model_chart(int rank, int dim, const Interval& t_box,
                               const Interval& transverse_box) {
    const int r = rank;
    const int ell = (dim - 2 * r) / 2;
    if (2 * r + 2 * ell != dim) throw PreconditionError("model chart: r, dim parity mismatch");
    std::vector<std::string> names;
    std::vector<Interval> box;
    std::vector<bool> periodic;
    for (int i = 1; i <= r; ++i) {
        names.push_back("theta_" + std::to_string(i));
        box.emplace_back(0.0, 1.0);
        periodic.push_back(true);
    }
    names.push_back("t");
    box.push_back(t_box);
    periodic.push_back(false);
    for (int i = 2; i <= r; ++i) {
        names.push_back("a_" + std::to_string(i));
        box.push_back(transverse_box);
        periodic.push_back(false);
    }
    for (int k = 1; k <= ell; ++k) {
        names.push_back("p_" + std::to_string(k));
        box.push_back(transverse_box);
        periodic.push_back(false);
    }
    for (int k = 1; k <= ell; ++k) {
        names.push_back("q_" + std::to_string(k));
        box.push_back(transverse_box);
        periodic.push_back(false);
    }
    return Chart(dim, std::move(names), r, std::move(box), std::move(periodic));
}

BForm normal_form_two_form(const Chart& model, double c) {
    const int r = model.t_index();
    const int dim = model.dim();
    const int ell = (dim - 2 * r) / 2;
    BForm w(model, 2);
    // (c/t) dtheta_1 ^ dt = -c (dt/t) ^ dtheta_1
    w.add_term({0, model.slot_of_coord(0)}, Expr::constant(-c));
    for (int i = 2; i <= r; ++i) {
        const int th = model.slot_of_coord(i - 1);
        const int ai = model.slot_of_coord(r + (i - 1));
        w.add_term({th, ai}, Expr::constant(1.0));
    }
    for (int k = 0; k < ell; ++k) {
        const int pk = model.slot_of_coord(2 * r - 1 + 1 + k);
        const int qk = model.slot_of_coord(2 * r - 1 + 1 + ell + k);
        w.add_term({pk, qk}, Expr::constant(1.0));
    }
    return w;
}

namespace {

const std::pair<std::vector<double>, std::vector<double>>& gl32() {
    static const auto tbl = [] {
        std::pair<std::vector<double>, std::vector<double>> t;
        gauss_legendre_01(32, t.first, t.second);
        return t;
    }();
    return tbl;
}

std::vector<int> transverse_coords(const Chart& chart) {
    std::vector<int> v;
    for (int i = 0; i < chart.dim(); ++i)
        if (!chart.periodic_coord(i)) v.push_back(i);
    return v;
}

} // namespace

double homotopy_integral(const Chart& chart, const MatrixFieldFn& lam, int row, int rank,
                         const Point& p, int quad_nodes) {
    std::vector<double> nodes, weights;
    if (quad_nodes == 32) {
        nodes = gl32().first;
        weights = gl32().second;
    } else {
        gauss_legendre_01(quad_nodes, nodes, weights);
    }
    const std::vector<int> trans = transverse_coords(chart);
    if (static_cast<int>(trans.size()) < rank)
        throw PreconditionError("homotopy_integral: fewer transverse coordinates than rank");

    double acc = 0.0;
    for (size_t q = 0; q < nodes.size(); ++q) {
        const double tau = nodes[q];
        Point ptau = p;
        for (int j = 0; j < rank; ++j)
            ptau[static_cast<size_t>(trans[static_cast<size_t>(j)])] *= tau;
        const Eigen::MatrixXd L = lam(ptau);
        double val = L(row, 0) / tau;
        for (int j = 2; j <= rank; ++j)
            val += L(row, j - 1) * p[static_cast<size_t>(trans[static_cast<size_t>(j - 1)])];
        acc += weights[q] * val;
    }
    return acc;
}

ActionCoordinates action_coordinates(const NCBSystem& sys, const UniformizedAction& uni,
                                     const SmoothField& defining_function, int quad_nodes) {
    const Chart& chart = sys.chart();
    const int r = sys.rank();
    ActionCoordinates out;
    out.modular_period = uni.modular_period;
    out.defining_function = defining_function;

    // alpha_i = iota_{Y_i} omega = -sum_j (gauge_i lambda_i^j) df_j
    const LatticeField lam = uni.lambda;
    const Eigen::VectorXd gauge = uni.gauge;
    const MatrixFieldFn lam_for_I = [lam, gauge](const Point& p) {
        return Eigen::MatrixXd(-(gauge.asDiagonal() * lam.eval(p)));
    };
    for (int i = 2; i <= r; ++i) {
        const int row = i - 1;
        out.a.push_back([chart, lam_for_I, row, r, quad_nodes](const Point& m) {
            return homotopy_integral(chart, lam_for_I, row, r, m, quad_nodes);
        });
    }
    return out;
}

Section default_section(const Chart& chart) {
    return Section{[chart](const Point& b_like) {
        Point p = b_like;
        for (int i = 0; i < chart.dim(); ++i)
            if (chart.periodic_coord(i)) p[static_cast<size_t>(i)] = 0.0;
        return p;
    }};
}

std::vector<double> angle_coordinates(const Chart& chart, const UniformizedAction& uni,
                                      const Section& sigma, const Point& m,
                                      const AngleOptions& opt) {
    const int r = static_cast<int>(uni.fields.size());
    const Point base = sigma.base(m);

    auto distance = [&](const std::vector<double>& th, Point* out_q) {
        const Point q = joint_flow(chart, uni.fields, base, th, opt.ode);
        double acc = 0.0;
        for (double d : chart.wrapped_delta(q, m)) acc += d * d;
        if (out_q) *out_q = q;
        return std::sqrt(acc);
    };

    // coarse seed over [0,1)^r, ties broken toward the smaller norm
    std::vector<double> best(static_cast<size_t>(r), 0.0);
    double best_d = std::numeric_limits<double>::infinity();
    double best_norm = 0.0;
    std::vector<int> idx(static_cast<size_t>(r), 0);
    const int g = opt.seed_grid;
    OdeOptions coarse = opt.ode;
    coarse.rel_tol = 1e-7;
    coarse.abs_tol = 1e-8;
    while (true) {
        std::vector<double> th(static_cast<size_t>(r));
        double norm = 0.0;
        for (int j = 0; j < r; ++j) {
            th[static_cast<size_t>(j)] = static_cast<double>(idx[static_cast<size_t>(j)]) / g;
            norm += th[static_cast<size_t>(j)] * th[static_cast<size_t>(j)];
        }
        const Point q = joint_flow(chart, uni.fields, base, th, coarse);
        double acc = 0.0;
        for (double d : chart.wrapped_delta(q, m)) acc += d * d;
        const double dist = std::sqrt(acc);
        if (dist < best_d - 1e-12 || (dist < best_d + 1e-12 && norm < best_norm)) {
            best_d = dist;
            best_norm = norm;
            best = th;
        }
        int j = r - 1;
        for (; j >= 0; --j) {
            if (++idx[static_cast<size_t>(j)] < g) break;
            idx[static_cast<size_t>(j)] = 0;
        }
        if (j < 0) break;
    }

    // Newton: the theta_j derivative of the joint flow is Y_j at the endpoint
    std::vector<double> th = best;
    const int n = chart.dim();
    for (int iter = 0; iter < opt.max_newton; ++iter) {
        Point q;
        distance(th, &q);
        const auto delta = chart.wrapped_delta(q, m);
        Eigen::VectorXd G(n);
        for (int i = 0; i < n; ++i) G(i) = delta[static_cast<size_t>(i)];
        if (G.norm() < opt.tol) {
            for (double& v : th) v = wrap_unit(v);
            return th;
        }
        Eigen::MatrixXd J(n, r);
        for (int j = 0; j < r; ++j) {
            const auto yj = uni.fields[static_cast<size_t>(j)](chart.wrap(q));
            for (int i = 0; i < n; ++i) J(i, j) = yj[static_cast<size_t>(i)];
        }
        const Eigen::VectorXd step = J.colPivHouseholderQr().solve(-G);
        if (!step.allFinite()) break;
        for (int j = 0; j < r; ++j) th[static_cast<size_t>(j)] += step(j);
    }
    throw NumericsError("angle_coordinates: shooting did not converge (bad section?)");
}

namespace {

struct TransverseCompletion {
    std::vector<Eigen::VectorXd> p_cov, q_cov;  // slot-space covectors, zero slot-0
    Eigen::VectorXd q1_cov;
    bool with_b_pair = false;
};

// Pairs of covectors factoring an antisymmetric matrix: B = sum phi_i ^ psi_i.
void factor_pairs(Eigen::MatrixXd B, std::vector<Eigen::VectorXd>& phis,
                  std::vector<Eigen::VectorXd>& psis, double tol = 1e-10) {
    const int n = static_cast<int>(B.rows());
    while (true) {
        int bi = 0, bj = 0;
        double best = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (std::abs(B(i, j)) > best) { best = std::abs(B(i, j)); bi = i; bj = j; }
        if (best < tol) break;
        const Eigen::VectorXd phi = B.row(bi).transpose() / B(bi, bj);
        const Eigen::VectorXd psi = B.row(bj).transpose();
        B -= phi * psi.transpose() - psi * phi.transpose();
        phis.push_back(phi);
        psis.push_back(psi);
    }
}

// Linear symplectic completion of the omega-orthogonal complement of the
// span of the given (slot-space) fields, inside the kernel of the given
// covectors, at the point m. Exact when omega has constant coefficients.
TransverseCompletion transverse_completion(const BSymplecticStructure& S, const Point& m,
                                           const std::vector<Eigen::VectorXd>& fields,
                                           const std::vector<Eigen::VectorXd>& covectors,
                                           bool with_b_pair) {
    const Chart& chart = S.chart();
    const int n = chart.dim();
    const int k = static_cast<int>(fields.size());
    const int red_dim = n - 2 * k;

    // kernel of [covectors; fields^T]
    Eigen::MatrixXd constraints(2 * k, n);
    for (int i = 0; i < k; ++i) {
        constraints.row(i) = covectors[static_cast<size_t>(i)].transpose();
        constraints.row(k + i) = fields[static_cast<size_t>(i)].transpose();
    }
    Eigen::MatrixXd kernel;
    if (k > 0) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraints, Eigen::ComputeFullV);
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-9 * svd.singularValues()(0)) ++rank;
        kernel = svd.matrixV().rightCols(n - rank);
        if (kernel.cols() != red_dim)
            throw NumericsError("transverse_completion: unexpected kernel dimension");
    } else {
        kernel = Eigen::MatrixXd::Identity(n, n);
    }

    // basis N: optionally anchor e_0 as the first column, the rest slot-0-free
    Eigen::MatrixXd N(n, red_dim);
    if (with_b_pair) {
        if (!chart.has_z())
            throw PreconditionError("transverse_completion: b-pair requested without Z");
        // find the kernel combination closest to e_0
        Eigen::VectorXd e0 = Eigen::VectorXd::Zero(n);
        e0(0) = 1.0;
        const Eigen::VectorXd coeff = kernel.colPivHouseholderQr().solve(e0);
        if ((kernel * coeff - e0).norm() > 1e-7)
            throw NumericsError("transverse_completion: t d/dt direction not available "
                                "(a commuting field consumes the b-direction)");
        N.col(0) = e0;
        // remaining columns: kernel vectors with the slot-0 component removed
        Eigen::MatrixXd rest(n, kernel.cols());
        int cnt = 0;
        for (int j = 0; j < kernel.cols(); ++j) {
            Eigen::VectorXd v = kernel.col(j);
            v(0) = 0.0;
            if (v.norm() > 1e-10) rest.col(cnt++) = v;
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(rest.leftCols(cnt), Eigen::ComputeThinU);
        int rnk = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-9 * svd.singularValues()(0)) ++rnk;
        if (rnk != red_dim - 1)
            throw NumericsError("transverse_completion: degenerate slot basis");
        N.rightCols(red_dim - 1) = svd.matrixU().leftCols(red_dim - 1);
    } else {
        // project out slot-0 (the kernel should already be slot-0-free)
        Eigen::MatrixXd rest = kernel;
        if (chart.has_z()) rest.row(0).setZero();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(rest, Eigen::ComputeThinU);
        int rnk = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-9 * svd.singularValues()(0)) ++rnk;
        if (rnk != red_dim)
            throw NumericsError("transverse_completion: reduced block touches the b-direction");
        N = svd.matrixU().leftCols(red_dim);
    }

    const Eigen::MatrixXd omega_red = N.transpose() * S.omega_matrix(m) * N;

    TransverseCompletion out;
    out.with_b_pair = with_b_pair;
    std::vector<Eigen::VectorXd> phis, psis;
    if (with_b_pair) {
        const Eigen::VectorXd beta = omega_red.row(0).transpose();
        if (beta.norm() < 1e-10)
            throw NumericsError("transverse_completion: Z not critical at the base point");
        out.q1_cov = N * beta;
        Eigen::MatrixXd rest = omega_red;
        // B_rest = B - a* ^ beta with a the first basis vector
        Eigen::VectorXd astar = Eigen::VectorXd::Zero(red_dim);
        astar(0) = 1.0;
        rest -= astar * beta.transpose() - beta * astar.transpose();
        factor_pairs(std::move(rest), phis, psis);
    } else {
        factor_pairs(omega_red, phis, psis);
    }
    for (size_t i = 0; i < phis.size(); ++i) {
        out.p_cov.push_back(N * phis[i]);
        out.q_cov.push_back(N * psis[i]);
    }
    const size_t expect = static_cast<size_t>((red_dim - (with_b_pair ? 2 : 0)) / 2);
    if (out.p_cov.size() != expect)
        throw NumericsError("transverse_completion: wrong number of symplectic pairs");
    return out;
}

// xi(x) = sum_{slots s >= 1} w_s * delta_{coord(s)}, local wrapped deltas
double linear_functional(const Chart& chart, const Eigen::VectorXd& w_slot, const Point& x,
                         const Point& m) {
    double acc = 0.0;
    const auto delta = chart.wrapped_delta(x, m);
    for (int s = 0; s < chart.dim(); ++s) {
        if (chart.has_z() && s == 0) continue;   // slot-0 components are always zero here
        const int ci = chart.coord_of_slot(s);
        acc += w_slot(s) * delta[static_cast<size_t>(ci)];
    }
    return acc;
}

} // namespace

ActionAngleChart build_action_angle_chart(const NCBSystem& sys, const UniformizedAction& uni,
                                          const SmoothField& defining_function,
                                          const Section& sigma, const AngleOptions& opt) {
    const Chart& chart = sys.chart();
    const int r = sys.rank();
    const int dim = chart.dim();
    const int ell = (dim - 2 * r) / 2;

    ActionAngleChart out{chart,
                         action_angle_model_chart(r, dim,
                                                  chart.box()[static_cast<size_t>(chart.t_index())]),
                         r, uni.modular_period, {}, uni.fields};

    const ActionCoordinates act = action_coordinates(sys, uni, defining_function);

    // transverse (p, q) block: linear Darboux completion at the on-Z section base
    std::vector<Eigen::VectorXd> pcov, qcov;
    Point base0(static_cast<size_t>(dim), 0.0);
    base0 = sigma.base(base0);
    if (chart.has_z()) base0[static_cast<size_t>(chart.t_index())] = 0.0;
    if (ell > 0) {
        std::vector<Eigen::VectorXd> fields, covs;
        for (int i = 0; i < r; ++i) {
            const auto frame = sys.commuting_fields()[static_cast<size_t>(i)].eval_frame(base0);
            Eigen::VectorXd x(dim), d(dim);
            for (int s = 0; s < dim; ++s) x(s) = frame[static_cast<size_t>(s)];
            const BForm df = b_differential(chart, sys.integral(i));
            d.setZero();
            Expr::Cache cache;
            for (const auto& [idx, c] : df.terms()) d(idx[0]) = c.eval(base0, cache);
            fields.push_back(std::move(x));
            covs.push_back(std::move(d));
        }
        const auto tc = transverse_completion(sys.structure(), base0, fields, covs, false);
        pcov = tc.p_cov;
        qcov = tc.q_cov;
    }

    const SmoothField tf = act.defining_function;
    const std::vector<ScalarFn> actions = act.a;
    const Section sec = sigma;
    const UniformizedAction uaction = uni;
    const AngleOptions aopt = opt;
    const Chart src = chart;
    out.map = [src, uaction, sec, aopt, tf, actions, pcov, qcov, base0, r, dim,
               ell](const Point& m) {
        Point img(static_cast<size_t>(dim), 0.0);
        const auto th = angle_coordinates(src, uaction, sec, m, aopt);
        for (int j = 0; j < r; ++j) img[static_cast<size_t>(j)] = th[static_cast<size_t>(j)];
        img[static_cast<size_t>(r)] = tf.eval(m);
        for (int i = 0; i < r - 1; ++i)
            img[static_cast<size_t>(r + 1 + i)] = actions[static_cast<size_t>(i)](m);
        for (int kk = 0; kk < ell; ++kk) {
            img[static_cast<size_t>(2 * r + kk)] =
                linear_functional(src, pcov[static_cast<size_t>(kk)], m, base0);
            img[static_cast<size_t>(2 * r + ell + kk)] =
                linear_functional(src, qcov[static_cast<size_t>(kk)], m, base0);
        }
        return img;
    };
    return out;
}

nlohmann::json ActionAngleChart::export_json(int grid_samples, std::uint64_t seed) const {
    SamplePlan plan(source, seed);
    nlohmann::json samples = nlohmann::json::array();
    for (int i = 0; i < grid_samples; ++i) {
        const Point p = plan.next(0.15);
        const Point img = map(p);
        samples.push_back(nlohmann::json{{"point", p}, {"image", img}});
    }
    return nlohmann::json{{"schema", 1},
                          {"modular_period", modular_period},
                          {"rank", rank},
                          {"coordinates", model.names()},
                          {"samples", samples}};
}

nlohmann::json NormalFormReport::to_json() const {
    return nlohmann::json{{"check", "thm15_normal_form"},
                          {"points_tested", points_tested},
                          {"max_residual", max_deviation},
                          {"fiber_variance", fiber_variance},
                          {"c_mismatch", c_mismatch},
                          {"pass", pass}};
}

NormalFormReport verify_normal_form(const NCBSystem& sys, const ActionAngleChart& chart,
                                    const std::vector<Point>& points, double tol, double fd_h,
                                    std::optional<double> lattice_modular_period) {
    NormalFormReport rep;
    rep.points_tested = static_cast<int>(points.size());
    const BForm nf = normal_form_two_form(chart.model, chart.modular_period);
    const MatrixFieldFn nf_mat = two_form_matrix(nf);
    const MatrixFieldFn src_mat = two_form_matrix(sys.structure().omega());

    for (const Point& p : points) {
        const Eigen::MatrixXd pulled =
            pullback_two_form(chart.source, chart.model, chart.map, nf_mat, p, fd_h);
        const double dev = (pulled - src_mat(p)).cwiseAbs().maxCoeff();
        rep.max_deviation = std::max(rep.max_deviation, dev);
    }

    // item 3: integral values constant along the torus action
    SamplePlan plan(chart.source, 31);
    for (int trial = 0; trial < 4; ++trial) {
        const Point p = plan.next_off_z(0.05, 0.2);
        std::vector<double> ref;
        for (const BFunction& f : sys.integrals()) ref.push_back(f.eval(chart.source, p));
        std::vector<double> th(static_cast<size_t>(chart.rank));
        for (int j = 0; j < chart.rank; ++j)
            th[static_cast<size_t>(j)] = radical_inverse(static_cast<std::uint64_t>(trial * 3 + j + 1), 2);
        const Point q = joint_flow(chart.source, chart.torus_action, p, th);
        for (size_t i = 0; i < ref.size(); ++i) {
            const double v = sys.integral(static_cast<int>(i)).eval(chart.source, chart.source.wrap(q));
            rep.fiber_variance = std::max(rep.fiber_variance, std::abs(v - ref[i]));
        }
    }

    if (lattice_modular_period)
        rep.c_mismatch = std::abs(chart.modular_period - *lattice_modular_period);
    rep.pass = rep.max_deviation < tol && rep.fiber_variance < 1e-8 &&
               (!lattice_modular_period || rep.c_mismatch < 1e-6);
    return rep;
}

DCChart darboux_caratheodory_chart(const BSymplecticStructure& S,
                                   const std::vector<BFunction>& commuting, const Point& m,
                                   const DCOptions& opt) {
    const Chart& chart = S.chart();
    const int n = chart.dim();
    const int k = static_cast<int>(commuting.size());
    const int half = n / 2;
    if (2 * k > n - 2) throw PreconditionError("darboux_caratheodory_chart: too many functions");
    if (!chart.has_z() || chart.t_value(m) != 0.0)
        throw PreconditionError("darboux_caratheodory_chart: base point must lie on Z");

    // preconditions: commuting, independent differentials, clean b-direction
    std::vector<BVectorField> xf;
    std::vector<Eigen::VectorXd> fields, covs;
    for (int i = 0; i < k; ++i) {
        if (commuting[static_cast<size_t>(i)].c() != 0.0)
            throw PreconditionError("darboux_caratheodory_chart: inputs must be smooth");
        xf.push_back(S.hamiltonian_field(commuting[static_cast<size_t>(i)]));
        for (int j = 0; j < i; ++j) {
            const Expr br = S.poisson_bracket(commuting[static_cast<size_t>(i)],
                                              commuting[static_cast<size_t>(j)]);
            if (std::abs(br.eval(m)) > 1e-9)
                throw PreconditionError("darboux_caratheodory_chart: inputs do not commute");
        }
        const auto frame = xf.back().eval_frame(m);
        Eigen::VectorXd x(n), d(n);
        for (int s = 0; s < n; ++s) x(s) = frame[static_cast<size_t>(s)];
        if (std::abs(x(0)) > 1e-9)
            throw NumericsError("darboux_caratheodory_chart: a Hamiltonian field consumes the "
                                "b-direction at m (unsupported)");
        const BForm df = b_differential(chart, commuting[static_cast<size_t>(i)]);
        d.setZero();
        Expr::Cache cache;
        for (const auto& [idx, c] : df.terms()) d(idx[0]) = c.eval(m, cache);
        fields.push_back(std::move(x));
        covs.push_back(std::move(d));
    }
    if (k > 0) {
        Eigen::MatrixXd dmat(k, n);
        for (int i = 0; i < k; ++i) dmat.row(i) = covs[static_cast<size_t>(i)].transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(dmat);
        if (svd.singularValues()(k - 1) < 1e-8)
            throw PreconditionError(
                "darboux_caratheodory_chart: differentials dependent at m");
    }

    // transversal slice: coordinate directions complementary to the fields
    std::vector<VectorFieldFn> flows;
    for (const auto& x : xf) flows.push_back(smooth_velocity(x));
    std::vector<int> slice;   // 2n-k coordinate indices
    {
        Eigen::MatrixXd xs(n, std::max(k, 1));
        xs.setZero();
        for (int i = 0; i < k; ++i) {
            const auto vel = xf[static_cast<size_t>(i)].eval_smooth(m);
            for (int c = 0; c < n; ++c) xs(c, i) = vel[static_cast<size_t>(c)];
        }
        // greedy pivoting: drop the k coordinates best aligned with the fields
        std::vector<bool> dropped(static_cast<size_t>(n), false);
        for (int i = 0; i < k; ++i) {
            int best = -1;
            double bv = 0.0;
            for (int c = 0; c < n; ++c)
                if (!dropped[static_cast<size_t>(c)] && std::abs(xs(c, i)) > bv) {
                    bv = std::abs(xs(c, i));
                    best = c;
                }
            if (best < 0) throw NumericsError("darboux_caratheodory_chart: field vanishes at m");
            dropped[static_cast<size_t>(best)] = true;
        }
        for (int c = 0; c < n; ++c)
            if (!dropped[static_cast<size_t>(c)]) slice.push_back(c);
    }

    // conjugate coordinates by flow time: solve Phi^s(m + E xi) = p
    const Chart src = chart;
    const OdeOptions ode = opt.ode;
    auto shoot = [src, flows, m, slice, k, n, ode](const Point& p) {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(k);
        Eigen::VectorXd xi(n - k);
        const auto d0 = src.wrapped_delta(p, m);
        for (size_t l = 0; l < slice.size(); ++l) xi(static_cast<long>(l)) = d0[static_cast<size_t>(slice[l])];
        const double h = 1e-7;
        for (int iter = 0; iter < 40; ++iter) {
            Point base = m;
            for (size_t l = 0; l < slice.size(); ++l)
                base[static_cast<size_t>(slice[l])] += xi(static_cast<long>(l));
            std::vector<double> sv(s.data(), s.data() + k);
            const Point q = joint_flow(src, flows, base, sv, ode);
            const auto delta = src.wrapped_delta(q, p);
            Eigen::VectorXd G(n);
            for (int i = 0; i < n; ++i) G(i) = delta[static_cast<size_t>(i)];
            if (G.norm() < 1e-12) return std::pair{s, xi};
            Eigen::MatrixXd J(n, n);
            for (int j = 0; j < k; ++j) {
                const auto yj = flows[static_cast<size_t>(j)](src.wrap(q));
                for (int i = 0; i < n; ++i) J(i, j) = yj[static_cast<size_t>(i)];
            }
            for (size_t l = 0; l < slice.size(); ++l) {
                Point bl = base;
                bl[static_cast<size_t>(slice[l])] += h;
                const Point ql = joint_flow(src, flows, bl, sv, ode);
                for (int i = 0; i < n; ++i)
                    J(i, k + static_cast<int>(l)) = (ql[static_cast<size_t>(i)] - q[static_cast<size_t>(i)]) / h;
            }
            const Eigen::VectorXd step = J.colPivHouseholderQr().solve(-G);
            if (!step.allFinite()) break;
            s += step.head(k);
            xi += step.tail(n - k);
        }
        throw NumericsError("darboux_caratheodory_chart: flow-box shooting did not converge");
    };

    const auto tc = transverse_completion(S, m, fields, covs, true);

    // model chart: (f_1, g_1, ..., f_k, g_k, t, q_1, p_2, q_2, ..., p_{n/2-k}, q_{n/2-k})
    std::vector<std::string> names;
    std::vector<Interval> box;
    std::vector<bool> periodic(static_cast<size_t>(n), false);
    for (int i = 1; i <= k; ++i) {
        names.push_back("f_" + std::to_string(i));
        names.push_back("g_" + std::to_string(i));
    }
    names.push_back("t");
    names.push_back("q_1");
    for (int i = 2; i <= half - k; ++i) {
        names.push_back("p_" + std::to_string(i));
        names.push_back("q_" + std::to_string(i));
    }
    for (int i = 0; i < n; ++i) box.emplace_back(-10.0, 10.0);
    DCChart out{Chart(n, std::move(names), 2 * k, std::move(box), std::move(periodic)), m, {}, 0.0};

    const std::vector<BFunction> fs = commuting;
    std::vector<double> f_at_m;
    for (const auto& f : fs) f_at_m.push_back(f.eval(chart, m));
    const auto pc = tc.p_cov, qc = tc.q_cov;
    const auto q1c = tc.q1_cov;
    out.map = [src, fs, f_at_m, shoot, m, pc, qc, q1c, k, n](const Point& p) {
        Point img(static_cast<size_t>(n), 0.0);
        const auto [s, xi] = shoot(p);
        for (int i = 0; i < k; ++i) {
            img[static_cast<size_t>(2 * i)] = fs[static_cast<size_t>(i)].eval(src, p) - f_at_m[static_cast<size_t>(i)];
            img[static_cast<size_t>(2 * i + 1)] = s(i);
        }
        img[static_cast<size_t>(2 * k)] = src.t_value(p);
        img[static_cast<size_t>(2 * k + 1)] = linear_functional(src, q1c, p, m);
        for (size_t l = 0; l < pc.size(); ++l) {
            img[static_cast<size_t>(2 * k + 2 + 2 * l)] = linear_functional(src, pc[l], p, m);
            img[static_cast<size_t>(2 * k + 3 + 2 * l)] = linear_functional(src, qc[l], p, m);
        }
        return img;
    };

    // Lemma 14(b) model form: sum df_i ^ dg_i + (dt/t) ^ dq_1 + sum dp ^ dq
    BForm model_form(out.model, 2);
    for (int i = 0; i < k; ++i)
        model_form.add_term({out.model.slot_of_coord(2 * i), out.model.slot_of_coord(2 * i + 1)},
                            Expr::constant(1.0));
    model_form.add_term({0, out.model.slot_of_coord(2 * k + 1)}, Expr::constant(1.0));
    for (int i = 0; i < half - k - 1; ++i)
        model_form.add_term({out.model.slot_of_coord(2 * k + 2 + 2 * i),
                             out.model.slot_of_coord(2 * k + 3 + 2 * i)},
                            Expr::constant(1.0));

    const MatrixFieldFn model_mat = two_form_matrix(model_form);
    const MatrixFieldFn src_mat = two_form_matrix(S.omega());
    SamplePlan plan(chart, opt.seed);
    for (int i = 0; i < opt.check_samples; ++i) {
        Point p = m;
        const Point u = plan.next();
        for (int c = 0; c < n; ++c) {
            const Interval& iv = chart.box()[static_cast<size_t>(c)];
            const double scale = 0.5 * (iv.hi - iv.lo);
            p[static_cast<size_t>(c)] += opt.sample_radius * scale *
                                         (2.0 * (u[static_cast<size_t>(c)] - iv.lo) / (iv.hi - iv.lo) - 1.0);
        }
        // keep away from Z so the pullback Jacobian is well defined
        const size_t ti = static_cast<size_t>(chart.t_index());
        if (std::abs(p[ti]) < 1e-3) p[ti] = p[ti] < 0 ? -1e-3 : 1e-3;
        const Eigen::MatrixXd pulled =
            pullback_two_form(chart, out.model, out.map, model_mat, p, opt.fd_h);
        out.max_form_deviation =
            std::max(out.max_form_deviation, (pulled - src_mat(p)).cwiseAbs().maxCoeff());
    }
    return out;
}

} // namespace bsym
