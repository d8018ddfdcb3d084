#include "bsym/bfunction.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "bsym/errors.hpp"

namespace bsym {

double BFunction::eval(const Chart& chart, const Point& p) const {
    const double gs = g_.eval(p);
    if (c_ == 0.0) return gs;
    if (!chart.has_z())
        throw PreconditionError("BFunction::eval: singular part on a chart without Z");
    const double t = chart.t_value(p);
    if (t == 0.0) return c_ > 0 ? -std::numeric_limits<double>::infinity()
                                : std::numeric_limits<double>::infinity();
    return c_ * std::log(std::abs(t)) + gs;
}

nlohmann::json BFunction::to_json() const {
    return nlohmann::json{{"c", c_}, {"g", g_.to_json()}};
}

BFunction BFunction::from_json(const nlohmann::json& j, std::span<const Interval> box) {
    try {
        return BFunction(j.at("c").get<double>(), Expr::from_json(j.at("g"), box));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("BFunction::from_json: ") + e.what());
    }
}

} // namespace bsym
