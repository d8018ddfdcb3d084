#include "bsym/chart.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bsym/errors.hpp"

namespace bsym {

double wrap_unit(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r -= 1.0;   // guard against floor rounding
    return r;
}

double wrap_centered(double x) {
    double r = wrap_unit(x);
    if (r >= 0.5) r -= 1.0;
    return r;
}

Chart::Chart(int dim, std::vector<std::string> names, int t_index,
             std::vector<Interval> box, std::vector<bool> periodic)
    : dim_(dim), names_(std::move(names)), t_index_(t_index),
      box_(std::move(box)), periodic_(std::move(periodic)) {
    if (dim_ <= 0 || dim_ % 2 != 0)
        throw PreconditionError("Chart: dimension must be positive and even");
    if (names_.size() != static_cast<size_t>(dim_) || box_.size() != static_cast<size_t>(dim_) ||
        periodic_.size() != static_cast<size_t>(dim_))
        throw PreconditionError("Chart: names/box/periodic sizes must equal dim");
    if (t_index_ < -1 || t_index_ >= dim_)
        throw PreconditionError("Chart: t_index out of range");
    if (t_index_ >= 0 && periodic_[static_cast<size_t>(t_index_)])
        throw PreconditionError("Chart: the defining coordinate cannot be periodic");
    for (int i = 0; i < dim_; ++i) {
        if (box_[static_cast<size_t>(i)].lo > box_[static_cast<size_t>(i)].hi)
            throw PreconditionError("Chart: empty interval in domain box");
    }
}

int Chart::slot_of_coord(int coord) const {
    if (!has_z()) return coord;
    if (coord == t_index_) return 0;
    return coord < t_index_ ? coord + 1 : coord;
}

int Chart::coord_of_slot(int slot) const {
    if (!has_z()) return slot;
    if (slot == 0) return t_index_;
    return slot <= t_index_ ? slot - 1 : slot;
}

Point Chart::wrap(Point p) const {
    for (int i = 0; i < dim_; ++i)
        if (periodic_[static_cast<size_t>(i)]) p[static_cast<size_t>(i)] = wrap_unit(p[static_cast<size_t>(i)]);
    return p;
}

std::vector<double> Chart::wrapped_delta(const Point& a, const Point& b) const {
    std::vector<double> d(static_cast<size_t>(dim_));
    for (int i = 0; i < dim_; ++i) {
        const size_t k = static_cast<size_t>(i);
        d[k] = periodic_[k] ? wrap_centered(a[k] - b[k]) : a[k] - b[k];
    }
    return d;
}

bool Chart::contains(const Point& p, double slack) const {
    if (p.size() != static_cast<size_t>(dim_)) return false;
    for (int i = 0; i < dim_; ++i) {
        const size_t k = static_cast<size_t>(i);
        if (periodic_[k]) continue;
        if (p[k] < box_[k].lo - slack || p[k] > box_[k].hi + slack) return false;
    }
    return true;
}

void Chart::require_inside(const Point& p) const {
    if (!contains(p)) throw DomainError("point outside chart domain: " + describe_point(p));
}

std::string Chart::describe_point(const Point& p) const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < p.size(); ++i) {
        if (i) os << ", ";
        if (i < names_.size()) os << names_[i] << "=";
        os << p[i];
    }
    os << ")";
    return os.str();
}

nlohmann::json Chart::to_json() const {
    nlohmann::json jbox = nlohmann::json::array();
    for (const Interval& iv : box_) jbox.push_back({iv.lo, iv.hi});
    return nlohmann::json{{"dim", dim_},
                          {"names", names_},
                          {"t_index", t_index_},
                          {"box", jbox},
                          {"periodic", periodic_}};
}

Chart Chart::from_json(const nlohmann::json& j) {
    try {
        const int dim = j.at("dim").get<int>();
        auto names = j.at("names").get<std::vector<std::string>>();
        const int t_index = j.at("t_index").get<int>();
        std::vector<Interval> box;
        for (const auto& e : j.at("box")) box.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
        auto periodic = j.at("periodic").get<std::vector<bool>>();
        return Chart(dim, std::move(names), t_index, std::move(box), std::move(periodic));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("Chart::from_json: ") + e.what());
    }
}

bool operator==(const Chart& a, const Chart& b) {
    if (a.dim_ != b.dim_ || a.t_index_ != b.t_index_ || a.names_ != b.names_ ||
        a.periodic_ != b.periodic_)
        return false;
    for (size_t i = 0; i < a.box_.size(); ++i)
        if (a.box_[i].lo != b.box_[i].lo || a.box_[i].hi != b.box_[i].hi) return false;
    return true;
}

} // namespace bsym
