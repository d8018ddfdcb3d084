#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "bsym/symplectic.hpp"

namespace bsym {

using ScalarFn = std::function<double(const Point&)>;

/// Non-commutative b-integrable system candidate: integrals (f_1..f_s) with
/// declared rank r on a b-symplectic chart. The first r integrals form the
/// commuting part. r + s = dim is enforced; the four defining conditions are
/// checked by verify_system, not the constructor. Rank 0 is admitted (the
/// translation examples), in which case a singular integral may sit anywhere;
/// for r >= 1 the non-commuting tail must be smooth.
class NCBSystem {
public:
    NCBSystem(BSymplecticStructure structure, std::vector<BFunction> integrals, int rank);

    const BSymplecticStructure& structure() const { return structure_; }
    const Chart& chart() const { return structure_.chart(); }
    const std::vector<BFunction>& integrals() const { return integrals_; }
    const BFunction& integral(int i) const { return integrals_[static_cast<size_t>(i)]; }
    int rank() const { return rank_; }
    int size() const { return static_cast<int>(integrals_.size()); }

    /// Hamiltonian fields of the commuting part (computed once, shared).
    const std::vector<BVectorField>& commuting_fields() const;

private:
    BSymplecticStructure structure_;
    std::vector<BFunction> integrals_;
    int rank_;
    mutable std::optional<std::vector<BVectorField>> fields_;
};

struct VerifyOptions {
    int samples = 160;
    int z_samples = 100;
    std::uint64_t seed = 5;
    double rank_tol = 1e-8;        // singular value threshold, condition (1)/(4)
    double involution_tol = 1e-8;  // condition (2)
    double dense_fraction = 0.99;  // "dense open subset" operationalization
};

struct ConditionReport {
    int id = 0;
    bool pass = false;
    double metric = 0.0;
    std::string detail;
    std::optional<Point> witness;
};

struct SystemReport {
    std::vector<ConditionReport> conditions;
    bool pass = false;

    const ConditionReport& condition(int id) const;
    nlohmann::json to_json(const Chart& chart) const;
};

/// Checks Def. 3.1, one report entry per condition:
///  (1) b-differentials of rank s on dense samples of M and of Z,
///  (2) commuting part in involution with everything,
///  (3) r + s = dim,
///  (4) commuting Hamiltonian fields independent as smooth fields at some
///      point of Z (witness recorded).
SystemReport verify_system(const NCBSystem& sys, const VerifyOptions& opt = {});

/// Result of the Prop.-13-style normalization: an equivalent system with
/// f_1 = log|t| for the new defining function t = e^{g/c} t', the remaining
/// integrals smooth, plus the affine map applied on the target space.
struct NormalFormResult {
    NCBSystem system;
    SmoothField defining_function;     // the new t as a field on the chart
    Eigen::MatrixXd target_map;        // f_new = target_map * f_old (after reorder)
    std::vector<int> order;            // order[i] = original index of new slot i
    bool already_normal = false;
};

NormalFormResult normal_form(const NCBSystem& sys);

/// Sampled table of {f_i, f_j} values, the data that pins down the induced
/// Poisson bracket on the target space.
struct TargetBracketTable {
    std::vector<Point> points;
    // values[i][j] antisymmetric; inner vector indexed like points
    std::vector<std::vector<std::vector<double>>> values;
    std::vector<std::vector<bool>> f_basic;

    int size() const { return static_cast<int>(values.size()); }
    nlohmann::json to_json() const;
};

/// Samples the bracket table and tests F-basicness of every entry by
/// comparing values at point pairs with equal F-values (pairs generated by
/// re-randomizing coordinates the integrals do not depend on; falls back to
/// nearest-neighbor matching on F with tolerance 1e-9). Throws NumericsError
/// on a non-F-basic entry.
TargetBracketTable induced_target_bracket(const NCBSystem& sys, const std::vector<Point>& points,
                                          std::uint64_t seed = 11, double basic_tol = 1e-6);

struct CasBasicReport {
    bool cas_basic = false;
    double max_bracket = 0.0;
    int worst_integral = -1;
};

/// Tests {h, f_j} ~ 0 for every integral f_j (sufficient for Cas-basicness
/// since F-basic functions are generated by the integrals).
CasBasicReport is_cas_basic(const NCBSystem& sys, const BFunction& h,
                            const std::vector<Point>& points, double tol = 1e-8);

/// Same test for a scalar known only pointwise; the bracket {h, f_j} is
/// evaluated as the directional derivative -X_{f_j}(h) by central differences
/// along the field.
CasBasicReport is_cas_basic(const NCBSystem& sys, const ScalarFn& h,
                            const std::vector<Point>& points, double tol = 1e-8,
                            double fd_step = 1e-5);

} // namespace bsym
