#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bsym/interval.hpp"

namespace bsym {

using Point = std::vector<double>;

/// A single coordinate chart on a b-manifold: an axis-aligned closed box with
/// named coordinates, optional periodic (angle) coordinates living on R/Z,
/// and a distinguished defining coordinate t whose zero locus is the critical
/// hypersurface Z. Charts with t_index == -1 are plain symplectic charts
/// (no Z); the b-coframe then has no dt/t slot.
///
/// Coframe slot convention: slot 0 is dt/t (when t exists), and the remaining
/// coordinates occupy slots 1..dim-1 in chart order. dt itself is never a
/// slot; smooth dt-components are stored as t * (dt/t).
class Chart {
public:
    Chart(int dim, std::vector<std::string> names, int t_index,
          std::vector<Interval> box, std::vector<bool> periodic);

    int dim() const { return dim_; }
    int t_index() const { return t_index_; }
    bool has_z() const { return t_index_ >= 0; }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<Interval>& box() const { return box_; }
    const std::vector<bool>& periodic() const { return periodic_; }
    bool periodic_coord(int i) const { return periodic_[static_cast<size_t>(i)]; }

    /// Coframe slot of a coordinate (slot 0 = dt/t) and its inverse.
    int slot_of_coord(int coord) const;
    int coord_of_slot(int slot) const;

    double t_value(const Point& p) const { return has_z() ? p[static_cast<size_t>(t_index_)] : 1.0; }
    bool on_z(const Point& p) const { return has_z() && t_value(p) == 0.0; }

    /// Canonicalize periodic coordinates into [0, 1).
    Point wrap(Point p) const;

    /// Componentwise difference with periodic coordinates wrapped to [-1/2, 1/2).
    std::vector<double> wrapped_delta(const Point& a, const Point& b) const;

    bool contains(const Point& p, double slack = 1e-9) const;
    void require_inside(const Point& p) const;    // throws DomainError

    std::string describe_point(const Point& p) const;

    nlohmann::json to_json() const;
    static Chart from_json(const nlohmann::json& j);

    friend bool operator==(const Chart& a, const Chart& b);

private:
    int dim_;
    std::vector<std::string> names_;
    int t_index_;
    std::vector<Interval> box_;
    std::vector<bool> periodic_;
};

/// Wrap a scalar into [0, 1).
double wrap_unit(double x);

/// Wrap a scalar into [-1/2, 1/2).
double wrap_centered(double x);

} // namespace bsym
