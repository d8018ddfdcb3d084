#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bsym/system.hpp"

namespace bsym {
namespace gallery {

/// A machine-checkable assertion attached to a gallery entry.
struct ExpectedFact {
    std::string name;
    std::function<bool(std::string& detail)> run;
};

struct GalleryEntry {
    std::string name;
    NCBSystem system;
    std::vector<ExpectedFact> facts;
};

/// The standard non-commutative b-integrable system on T^r x B^s with
/// modular period c: the Theorem-15 normal form with integrals
/// (log|t|, a_2..a_r, p_1..q_l).
GalleryEntry standard_model(int r, int s, double c);

/// standard_model(2, 2, c) pulled back through the volume-preserving shuffle
/// (theta_1, theta_2, t, a_2) -> (theta_1 + theta_2, theta_2, t, a_2 + kappa t):
/// same integrals, non-constant coefficient matrix, sheared period lattice.
GalleryEntry scrambled_standard_model(double c, double kappa);

/// The (x) system on the symplectic plane, the default base for
/// boundary_double.
NCBSystem boundary_double_default_base();

/// Product of a smooth non-commutative system on a symplectic chart N with
/// the (h, theta) annulus carrying (1/h) dh ^ dtheta: the system
/// (log|h|, f_1..f_s) of rank r+1 with Z = {h = 0}.
GalleryEntry boundary_double(const NCBSystem& base);

/// Twisted b-cotangent lift of the componentwise translation action on
/// T^1 x R^{n-1}: omega = -d(log|a| dtheta + sum y_i dx_i), integrals
/// (log|a|, y_1..y_{n-1}).
GalleryEntry twisted_lift(int n = 2);

enum class GalileanVariant { translations, so3_r3, s1_r3_r3, b_translations, b_s1 };

/// The Galilean-subgroup systems on the space of motions R^6, smooth and
/// b-versions.
GalleryEntry galilean(GalileanVariant variant);

GalileanVariant galilean_variant_from_string(const std::string& s);

/// (z) on omega = (1/t) dt ^ dz: passes conditions (1)-(3) and fails (4).
GalleryEntry counterexample_2d();

/// By-name constructor for the CLI: "standard_model:r,s,c",
/// "scrambled_standard_model:c,kappa", "boundary_double", "twisted_lift:n",
/// "galilean:variant", "counterexample_2d".
GalleryEntry by_name(const std::string& spec);

std::vector<std::string> names();

} // namespace gallery
} // namespace bsym
