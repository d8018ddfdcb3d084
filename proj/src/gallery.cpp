#include "bsym/gallery.hpp"

#include <cmath>
#include <sstream>

#include "bsym/action_angle.hpp"
#include "bsym/dynamics.hpp"
#include "bsym/errors.hpp"

namespace bsym {
namespace gallery {

namespace {

ExpectedFact verifier_passes(const NCBSystem& sys) {
    return {"verifier_passes", [sys](std::string& detail) {
                const SystemReport rep = verify_system(sys);
                if (!rep.pass) {
                    for (const auto& c : rep.conditions)
                        if (!c.pass) detail += "condition " + std::to_string(c.id) + " failed; ";
                }
                return rep.pass;
            }};
}

ExpectedFact condition_fails(const NCBSystem& sys, int id, const std::string& label) {
    return {label, [sys, id](std::string& detail) {
                const SystemReport rep = verify_system(sys);
                bool others = true;
                for (const auto& c : rep.conditions)
                    if (c.id != id && !c.pass) others = false;
                const bool failed = !rep.condition(id).pass;
                if (!failed) detail = "condition unexpectedly passed";
                if (!others) detail += "; an unrelated condition failed";
                detail += " [" + rep.condition(id).detail + "]";
                return failed && others;
            }};
}

Expr c1(double v) { return Expr::constant(v); }
Expr x(int i) { return Expr::coord(i); }

} // namespace

GalleryEntry standard_model(int r, int s, double c) {
    if (r < 1 || s < r || (s - r) % 2 != 0)
        throw PreconditionError("standard_model: need r >= 1, s >= r, s - r even");
    const int dim = r + s;
    const Chart chart =
        action_angle_model_chart(r, dim, Interval{-0.8, 0.8}, Interval{-0.8, 0.8});
    const BForm omega = normal_form_two_form(chart, c);
    std::vector<BFunction> integrals;
    integrals.emplace_back(1.0, c1(0.0));               // log|t|
    for (int i = r + 1; i < dim; ++i) integrals.emplace_back(x(i));
    NCBSystem sys(BSymplecticStructure(chart, omega), std::move(integrals), r);

    GalleryEntry e{"standard_model(" + std::to_string(r) + "," + std::to_string(s) + "," +
                       std::to_string(c) + ")",
                   sys,
                   {}};
    e.facts.push_back(verifier_passes(sys));
    e.facts.push_back({"transverse_block_arithmetic", [r, s, dim](std::string& detail) {
                           const int ell = (s - r) / 2;
                           if (2 * (r + ell) != dim) {
                               detail = "l = (s-r)/2 arithmetic violated";
                               return false;
                           }
                           return true;
                       }});
    e.facts.push_back({"on_z_circle_period", [sys, c](std::string& detail) {
                           // flow of log|t| on Z: closes up after time |c|
                           Point p0(static_cast<size_t>(sys.chart().dim()), 0.0);
                           const Trajectory traj =
                               flow(sys.structure(), sys.integral(0), p0, std::abs(c));
                           const auto d = sys.chart().wrapped_delta(traj.back(), p0);
                           double acc = 0.0;
                           for (double v : d) acc += v * v;
                           if (std::sqrt(acc) > 1e-7) {
                               detail = "period-|c| closure residual " + std::to_string(std::sqrt(acc));
                               return false;
                           }
                           return true;
                       }});
    return e;
}

GalleryEntry scrambled_standard_model(double c, double kappa) {
    const Chart chart = action_angle_model_chart(2, 4, Interval{-0.75, 0.75}, Interval{-0.75, 0.75});
    // pullback of the normal form under the shuffle: Omega_{0,theta1} = -c,
    // Omega_{0,theta2} = -c - kappa t, Omega_{theta2,a2} = 1
    BForm omega(chart, 2);
    const int th1 = chart.slot_of_coord(0);
    const int th2 = chart.slot_of_coord(1);
    const int a2 = chart.slot_of_coord(3);
    omega.add_term({0, th1}, c1(-c));
    omega.add_term({0, th2}, c1(-c) - kappa * x(2));
    omega.add_term({th2, a2}, c1(1.0));
    std::vector<BFunction> integrals;
    integrals.emplace_back(1.0, c1(0.0));
    integrals.emplace_back(x(3));
    NCBSystem sys(BSymplecticStructure(chart, omega), std::move(integrals), 2);
    GalleryEntry e{"scrambled_standard_model(" + std::to_string(c) + "," + std::to_string(kappa) +
                       ")",
                   sys,
                   {}};
    e.facts.push_back(verifier_passes(sys));
    return e;
}

NCBSystem boundary_double_default_base() {
    Chart chart(2, {"x", "y"}, -1, {Interval{-0.8, 0.8}, Interval{-0.8, 0.8}}, {false, false});
    BForm omega(chart, 2);
    omega.add_term({0, 1}, c1(1.0));
    return NCBSystem(BSymplecticStructure(chart, omega), {BFunction(x(0))}, 1);
}

GalleryEntry boundary_double(const NCBSystem& base) {
    if (base.chart().has_z())
        throw PreconditionError("boundary_double: base must live on a symplectic chart");
    if (!verify_system(base).pass)
        throw PreconditionError("boundary_double: base system does not verify");

    const Chart& bc = base.chart();
    const int bd = bc.dim();
    std::vector<std::string> names = bc.names();
    names.push_back("h");
    names.push_back("theta_h");
    std::vector<Interval> box = bc.box();
    box.emplace_back(-0.8, 0.8);
    box.emplace_back(0.0, 1.0);
    std::vector<bool> periodic = bc.periodic();
    periodic.push_back(false);
    periodic.push_back(true);
    Chart chart(bd + 2, std::move(names), bd, std::move(box), std::move(periodic));

    BForm omega(chart, 2);
    for (const auto& [idx, coeff] : base.structure().omega().terms()) {
        // base coordinates keep their indices; their slots shift by one
        omega.add_term({chart.slot_of_coord(idx[0]), chart.slot_of_coord(idx[1])}, coeff);
    }
    omega.add_term({0, chart.slot_of_coord(bd + 1)}, c1(1.0));   // (dh/h) ^ dtheta_h

    std::vector<BFunction> integrals;
    integrals.emplace_back(1.0, c1(0.0));   // log|h|
    for (int i = 0; i < base.rank(); ++i) integrals.push_back(base.integral(i));
    for (int i = base.rank(); i < base.size(); ++i) integrals.push_back(base.integral(i));
    NCBSystem sys(BSymplecticStructure(chart, omega), std::move(integrals), base.rank() + 1);

    GalleryEntry e{"boundary_double", sys, {}};
    e.facts.push_back(verifier_passes(sys));
    e.facts.push_back({"critical_hypersurface_is_h", [sys, bd](std::string& detail) {
                           if (sys.chart().t_index() != bd) {
                               detail = "t_index mismatch";
                               return false;
                           }
                           return sys.structure().critical_z();
                       }});
    e.facts.push_back({"base_brackets_unchanged", [sys, base](std::string& detail) {
                           SamplePlan plan(sys.chart(), 41);
                           const auto pts = plan.take(25);
                           double worst = 0.0;
                           for (int i = 0; i < base.size(); ++i) {
                               for (int j = i + 1; j < base.size(); ++j) {
                                   const Expr bb = base.structure().poisson_bracket(
                                       base.integral(i), base.integral(j));
                                   const Expr pb = sys.structure().poisson_bracket(
                                       sys.integral(i + 1), sys.integral(j + 1));
                                   for (const Point& p : pts) {
                                       Point bp(p.begin(), p.begin() + base.chart().dim());
                                       worst = std::max(worst,
                                                        std::abs(pb.eval(p) - bb.eval(bp)));
                                   }
                               }
                           }
                           if (worst > 1e-12) {
                               detail = "bracket drift " + std::to_string(worst);
                               return false;
                           }
                           return true;
                       }});
    return e;
}

GalleryEntry twisted_lift(int n) {
    if (n < 1) throw PreconditionError("twisted_lift: n >= 1");
    const int dim = 2 * n;
    std::vector<std::string> names{"theta", "a"};
    std::vector<Interval> box{Interval{0.0, 1.0}, Interval{-0.8, 0.8}};
    std::vector<bool> periodic{true, false};
    for (int i = 1; i < n; ++i) {
        names.push_back("x_" + std::to_string(i));
        box.emplace_back(-0.8, 0.8);
        periodic.push_back(false);
    }
    for (int i = 1; i < n; ++i) {
        names.push_back("y_" + std::to_string(i));
        box.emplace_back(-0.8, 0.8);
        periodic.push_back(false);
    }
    Chart chart(dim, std::move(names), 1, std::move(box), std::move(periodic));

    // omega = -d(log|a| dtheta + sum y_i dx_i) = -(da/a)^dtheta + sum dx_i^dy_i
    BForm omega(chart, 2);
    omega.add_term({0, chart.slot_of_coord(0)}, c1(-1.0));
    for (int i = 1; i < n; ++i)
        omega.add_term({chart.slot_of_coord(1 + i), chart.slot_of_coord(n + i)}, c1(1.0));

    // moment map of the translation action: <lambda, rotation> = log|a|,
    // <lambda, d/dx_i> = y_i
    std::vector<BFunction> integrals;
    integrals.emplace_back(1.0, c1(0.0));
    for (int i = 1; i < n; ++i) integrals.emplace_back(x(n + i));
    NCBSystem sys(BSymplecticStructure(chart, omega), std::move(integrals), n);

    GalleryEntry e{"twisted_lift(" + std::to_string(n) + ")", sys, {}};
    e.facts.push_back(verifier_passes(sys));
    e.facts.push_back({"rotation_field_is_hamiltonian_for_log_a", [sys](std::string& detail) {
                           const BVectorField xl = sys.structure().hamiltonian_field(sys.integral(0));
                           // X_{log|a|} = -d/dtheta under C1
                           const int th = sys.chart().slot_of_coord(0);
                           SamplePlan plan(sys.chart(), 7);
                           double worst = 0.0;
                           for (const Point& p : plan.take(20)) {
                               const auto v = xl.eval_frame(p);
                               for (int s = 0; s < sys.chart().dim(); ++s) {
                                   const double want = (s == th) ? -1.0 : 0.0;
                                   worst = std::max(worst, std::abs(v[static_cast<size_t>(s)] - want));
                               }
                           }
                           if (worst > 1e-12) {
                               detail = "field deviates by " + std::to_string(worst);
                               return false;
                           }
                           return true;
                       }});
    if (n >= 2) {
        e.facts.push_back({"x_translation_moment_is_y", [sys](std::string& detail) {
                               // X_{y_1} = -d/dx_1 under C1
                               const BVectorField xy = sys.structure().hamiltonian_field(sys.integral(1));
                               const int sx = sys.chart().slot_of_coord(2);
                               SamplePlan plan(sys.chart(), 8);
                               double worst = 0.0;
                               for (const Point& p : plan.take(20)) {
                                   const auto v = xy.eval_frame(p);
                                   for (int s = 0; s < sys.chart().dim(); ++s) {
                                       const double want = (s == sx) ? -1.0 : 0.0;
                                       worst = std::max(worst,
                                                        std::abs(v[static_cast<size_t>(s)] - want));
                                   }
                               }
                               if (worst > 1e-12) {
                                   detail = "field deviates by " + std::to_string(worst);
                                   return false;
                               }
                               return true;
                           }});
    }
    e.facts.push_back({"residue_is_dtheta_up_to_sign", [sys](std::string& detail) {
                           const ResidueSplit split = residue_split(sys.structure().omega());
                           const int th = sys.chart().slot_of_coord(0);
                           double worst = -1.0;
                           for (const auto& [idx, c] : split.residue.terms()) {
                               if (idx == MultiIndex{th})
                                   worst = std::abs(std::abs(c.eval(Point(
                                                        static_cast<size_t>(sys.chart().dim()), 0.0))) -
                                                    1.0);
                               else if (!c.is_zero()) {
                                   detail = "unexpected residue term";
                                   return false;
                               }
                           }
                           if (worst < 0 || worst > 1e-14) {
                               detail = "residue coefficient mismatch";
                               return false;
                           }
                           return true;
                       }});
    return e;
}

namespace {

struct GalileanParts {
    Chart symplectic;
    Chart bchart;
    BForm omega_s;
    BForm omega_b;
    std::vector<Expr> f;   // angular momentum components
};

GalileanParts galilean_parts() {
    std::vector<std::string> names{"x_1", "x_2", "x_3", "y_1", "y_2", "y_3"};
    std::vector<Interval> box(6, Interval{-1.5, 1.5});
    std::vector<bool> periodic(6, false);
    Chart cs(6, names, -1, box, periodic);
    Chart cb(6, names, 3, box, periodic);   // Z = {y_1 = 0}

    BForm ws(cs, 2);
    for (int i = 0; i < 3; ++i) ws.add_term({i, 3 + i}, c1(1.0));

    BForm wb(cb, 2);
    wb.add_term({0, cb.slot_of_coord(0)}, c1(1.0));   // (dy_1/y_1) ^ dx_1
    for (int i = 1; i < 3; ++i)
        wb.add_term({cb.slot_of_coord(3 + i), cb.slot_of_coord(i)}, c1(1.0));   // dy_i ^ dx_i

    // f = x x y (angular momentum)
    std::vector<Expr> f{x(1) * x(5) - x(2) * x(4),    // x_2 y_3 - x_3 y_2
                        x(2) * x(3) - x(0) * x(5),    // x_3 y_1 - x_1 y_3
                        x(0) * x(4) - x(1) * x(3)};   // x_1 y_2 - x_2 y_1
    return {std::move(cs), std::move(cb), std::move(ws), std::move(wb), std::move(f)};
}

} // namespace

GalleryEntry galilean(GalileanVariant variant) {
    GalileanParts parts = galilean_parts();
    switch (variant) {
        case GalileanVariant::translations: {
            std::vector<BFunction> ints;
            for (int i = 0; i < 6; ++i) ints.emplace_back(x(i));
            NCBSystem sys(BSymplecticStructure(parts.symplectic, parts.omega_s), std::move(ints), 0);
            GalleryEntry e{"galilean:translations", sys, {verifier_passes(sys)}};
            return e;
        }
        case GalileanVariant::so3_r3: {
            std::vector<BFunction> ints;
            for (int i = 0; i < 3; ++i) ints.emplace_back(parts.f[static_cast<size_t>(i)]);
            for (int i = 0; i < 3; ++i) ints.emplace_back(x(i));
            NCBSystem sys(BSymplecticStructure(parts.symplectic, parts.omega_s), std::move(ints), 0);
            GalleryEntry e{"galilean:so3_r3", sys, {verifier_passes(sys)}};
            e.facts.push_back({"so3_cyclic_brackets", [sys](std::string& detail) {
                                   SamplePlan plan(sys.chart(), 19);
                                   const auto pts = plan.take(100);
                                   double worst = 0.0;
                                   for (int i = 0; i < 3; ++i) {
                                       const int j = (i + 1) % 3, k = (i + 2) % 3;
                                       const Expr br = sys.structure().poisson_bracket(
                                           sys.integral(i), sys.integral(j));
                                       const Expr fk = sys.integral(k).g();
                                       for (const Point& p : pts)
                                           worst = std::max(worst,
                                                            std::abs(br.eval(p) - fk.eval(p)));
                                   }
                                   if (worst > 1e-12) {
                                       detail = "max |{f_i,f_j} - f_k| = " + std::to_string(worst);
                                       return false;
                                   }
                                   return true;
                               }});
            e.facts.push_back({"fundamental_fields_match", [sys](std::string& detail) {
                                   // e_1# = x_3 d/dx_2 - y_2 d/dy_3 - x_2 d/dx_3 + y_3 d/dy_2,
                                   // cyclically; equal to X_{f_i} under C1
                                   auto want = [](int i, const Point& p) {
                                       std::vector<double> v(6, 0.0);
                                       const int a = (i + 1) % 3, b = (i + 2) % 3;
                                       v[static_cast<size_t>(a)] = p[static_cast<size_t>(b)];
                                       v[static_cast<size_t>(b)] = -p[static_cast<size_t>(a)];
                                       v[static_cast<size_t>(3 + a)] = p[static_cast<size_t>(3 + b)];
                                       v[static_cast<size_t>(3 + b)] = -p[static_cast<size_t>(3 + a)];
                                       return v;
                                   };
                                   SamplePlan plan(sys.chart(), 29);
                                   double worst = 0.0;
                                   for (const Point& p : plan.take(40)) {
                                       for (int i = 0; i < 3; ++i) {
                                           const auto got =
                                               sys.structure().hamiltonian_field(sys.integral(i)).eval_smooth(p);
                                           const auto w = want(i, p);
                                           for (int cidx = 0; cidx < 6; ++cidx)
                                               worst = std::max(worst,
                                                                std::abs(got[static_cast<size_t>(cidx)] -
                                                                         w[static_cast<size_t>(cidx)]));
                                       }
                                   }
                                   if (worst > 1e-12) {
                                       detail = "fields deviate by " + std::to_string(worst);
                                       return false;
                                   }
                                   return true;
                               }});
            return e;
        }
        case GalileanVariant::s1_r3_r3: {
            std::vector<BFunction> ints{BFunction(x(3)), BFunction(parts.f[0]), BFunction(x(1)),
                                        BFunction(x(2)), BFunction(x(4))};
            NCBSystem sys(BSymplecticStructure(parts.symplectic, parts.omega_s), std::move(ints), 1);
            GalleryEntry e{"galilean:s1_r3_r3", sys, {verifier_passes(sys)}};
            return e;
        }
        case GalileanVariant::b_translations: {
            std::vector<BFunction> ints;
            for (int i = 0; i < 3; ++i) ints.emplace_back(x(i));
            ints.emplace_back(1.0, c1(0.0));   // log|y_1|
            ints.emplace_back(x(4));
            ints.emplace_back(x(5));
            NCBSystem sys(BSymplecticStructure(parts.bchart, parts.omega_b), std::move(ints), 0);
            GalleryEntry e{"galilean:b_translations", sys, {verifier_passes(sys)}};
            return e;
        }
        case GalileanVariant::b_s1: {
            std::vector<BFunction> ints{BFunction(1.0, c1(0.0)), BFunction(parts.f[0]),
                                        BFunction(x(1)), BFunction(x(2)), BFunction(x(4))};
            NCBSystem sys(BSymplecticStructure(parts.bchart, parts.omega_b), std::move(ints), 1);
            GalleryEntry e{"galilean:b_s1", sys, {verifier_passes(sys)}};
            e.facts.push_back(
                {"so3_b_version_rejected", [](std::string& detail) {
                     // the e_2 candidate Hamiltonian x_3 log|y_1| - x_1 y_3 has a
                     // non-constant log coefficient, so it is not a b-function
                     const LogCandidate cand{x(2), c1(-1.0) * x(0) * x(5)};
                     if (cand.is_bfunction()) {
                         detail = "candidate unexpectedly extends to a b-function";
                         return false;
                     }
                     return true;
                 }});
            {
                // the smooth substitute (x_1, f_1, x_2, x_3, y_2) has X_{x_1}
                // proportional to y_1 d/dy_1, which vanishes on Z
                GalileanParts q = galilean_parts();
                std::vector<BFunction> bad{BFunction(x(0)), BFunction(q.f[0]), BFunction(x(1)),
                                           BFunction(x(2)), BFunction(x(4))};
                NCBSystem bad_sys(BSymplecticStructure(q.bchart, q.omega_b), std::move(bad), 1);
                e.facts.push_back(condition_fails(bad_sys, 4, "x1_substitute_fails_condition_4"));
                e.facts.push_back({"x1_field_vanishes_on_z", [bad_sys](std::string& detail) {
                                       const auto xf = bad_sys.structure().hamiltonian_field(
                                           bad_sys.integral(0));
                                       SamplePlan plan(bad_sys.chart(), 37);
                                       double worst = 0.0;
                                       for (const Point& p : plan.take_on_z(30)) {
                                           for (double v : xf.eval_smooth(p))
                                               worst = std::max(worst, std::abs(v));
                                       }
                                       if (worst > 1e-14) {
                                           detail = "smooth field nonzero on Z: " +
                                                    std::to_string(worst);
                                           return false;
                                       }
                                       return true;
                                   }});
            }
            return e;
        }
    }
    throw PreconditionError("galilean: unknown variant");
}

GalileanVariant galilean_variant_from_string(const std::string& s) {
    if (s == "translations") return GalileanVariant::translations;
    if (s == "so3_r3") return GalileanVariant::so3_r3;
    if (s == "s1_r3_r3") return GalileanVariant::s1_r3_r3;
    if (s == "b_translations") return GalileanVariant::b_translations;
    if (s == "b_s1") return GalileanVariant::b_s1;
    throw ParseError("galilean: unknown variant \"" + s + "\"");
}

GalleryEntry counterexample_2d() {
    Chart chart(2, {"t", "z"}, 0, {Interval{-0.8, 0.8}, Interval{-0.8, 0.8}}, {false, false});
    BForm omega(chart, 2);
    omega.add_term({0, 1}, c1(1.0));   // (dt/t) ^ dz
    NCBSystem sys(BSymplecticStructure(chart, omega), {BFunction(x(1))}, 1);
    GalleryEntry e{"counterexample_2d", sys, {}};
    e.facts.push_back({"condition_1_passes", [sys](std::string& detail) {
                           const SystemReport rep = verify_system(sys);
                           if (!rep.condition(1).pass) {
                               detail = rep.condition(1).detail;
                               return false;
                           }
                           return true;
                       }});
    e.facts.push_back(condition_fails(sys, 4, "condition_4_fails"));
    e.facts.push_back({"log_replacement_passes", [](std::string& detail) {
                           Chart chart2(2, {"t", "z"}, 0,
                                        {Interval{-0.8, 0.8}, Interval{-0.8, 0.8}},
                                        {false, false});
                           BForm w(chart2, 2);
                           w.add_term({0, 1}, Expr::constant(1.0));
                           NCBSystem good(BSymplecticStructure(chart2, w),
                                          {BFunction(1.0, Expr::constant(0.0))}, 1);
                           const SystemReport rep = verify_system(good);
                           if (!rep.pass) detail = "replacement system failed";
                           return rep.pass;
                       }});
    return e;
}

GalleryEntry by_name(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    std::vector<std::string> args;
    if (colon != std::string::npos) {
        std::stringstream ss(spec.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) args.push_back(tok);
    }
    auto num = [&](size_t i, double dflt) {
        if (i >= args.size()) return dflt;
        try {
            return std::stod(args[i]);
        } catch (const std::exception&) {
            throw ParseError("gallery: bad numeric argument \"" + args[i] + "\"");
        }
    };
    if (head == "standard_model")
        return standard_model(static_cast<int>(num(0, 1)), static_cast<int>(num(1, 1)), num(2, 1.0));
    if (head == "scrambled_standard_model") return scrambled_standard_model(num(0, 1.0), num(1, 0.4));
    if (head == "boundary_double") return boundary_double(boundary_double_default_base());
    if (head == "twisted_lift") return twisted_lift(static_cast<int>(num(0, 2)));
    if (head == "galilean") {
        if (args.empty()) throw ParseError("gallery: galilean needs a variant");
        return galilean(galilean_variant_from_string(args[0]));
    }
    if (head == "counterexample_2d") return counterexample_2d();
    throw ParseError("gallery: unknown entry \"" + spec + "\"");
}

std::vector<std::string> names() {
    return {"standard_model:r,s,c", "scrambled_standard_model:c,kappa", "boundary_double",
            "twisted_lift:n",       "galilean:variant",                 "counterexample_2d"};
}

} // namespace gallery
} // namespace bsym
