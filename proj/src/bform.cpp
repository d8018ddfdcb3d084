#include "bsym/bform.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bsym/errors.hpp"

namespace bsym {

int sort_multi_index(MultiIndex& idx) {
    int sign = 1;
    for (size_t i = 1; i < idx.size(); ++i) {
        for (size_t j = i; j > 0 && idx[j] < idx[j - 1]; --j) {
            std::swap(idx[j], idx[j - 1]);
            sign = -sign;
        }
    }
    for (size_t i = 1; i < idx.size(); ++i)
        if (idx[i] == idx[i - 1]) return 0;
    return sign;
}

BForm::BForm(Chart chart, int degree) : chart_(std::move(chart)), degree_(degree) {
    if (degree_ < 0 || degree_ > chart_.dim())
        throw PreconditionError("BForm: degree out of range");
}

BForm& BForm::add_term(MultiIndex idx, const Expr& coeff) {
    if (static_cast<int>(idx.size()) != degree_)
        throw PreconditionError("BForm::add_term: index length != degree");
    for (int s : idx)
        if (s < 0 || s >= chart_.dim())
            throw PreconditionError("BForm::add_term: slot out of range");
    const int sign = sort_multi_index(idx);
    if (sign == 0 || coeff.is_zero()) return *this;
    const Expr signed_coeff = sign == 1 ? coeff : -coeff;
    auto it = terms_.find(idx);
    if (it == terms_.end()) {
        terms_.emplace(std::move(idx), signed_coeff);
    } else {
        Expr sum = it->second + signed_coeff;
        if (sum.is_zero())
            terms_.erase(it);
        else
            it->second = sum;
    }
    return *this;
}

Expr BForm::coeff(const MultiIndex& idx) const {
    auto it = terms_.find(idx);
    return it == terms_.end() ? Expr::constant(0.0) : it->second;
}

BForm BForm::operator+(const BForm& o) const {
    if (degree_ != o.degree_) throw PreconditionError("BForm::+: degree mismatch");
    BForm r = *this;
    for (const auto& [idx, c] : o.terms_) r.add_term(idx, c);
    return r;
}

BForm BForm::operator-(const BForm& o) const { return *this + o.scaled(-1.0); }

BForm BForm::scaled(const Expr& s) const {
    BForm r(chart_, degree_);
    for (const auto& [idx, c] : terms_) r.add_term(idx, Expr::mul(s, c));
    return r;
}

BForm BForm::scaled(double s) const { return scaled(Expr::constant(s)); }

double BForm::eval_coeff(const MultiIndex& idx, const Point& p) const {
    MultiIndex k = idx;
    const int sign = sort_multi_index(k);
    if (sign == 0) return 0.0;
    auto it = terms_.find(k);
    return it == terms_.end() ? 0.0 : sign * it->second.eval(p);
}

double BForm::pair(const std::vector<const BVectorField*>& fields, const Point& p) const {
    if (static_cast<int>(fields.size()) != degree_)
        throw PreconditionError("BForm::pair: need exactly degree vector fields");
    const int k = degree_;
    std::vector<std::vector<double>> v;
    v.reserve(fields.size());
    for (const BVectorField* f : fields) v.push_back(f->eval_frame(p));
    Expr::Cache cache;
    double total = 0.0;
    Eigen::MatrixXd m(k, k);
    for (const auto& [idx, c] : terms_) {
        for (int row = 0; row < k; ++row)
            for (int col = 0; col < k; ++col)
                m(row, col) = v[static_cast<size_t>(col)][static_cast<size_t>(idx[static_cast<size_t>(row)])];
        const double det = k == 0 ? 1.0 : m.determinant();
        if (det != 0.0) total += c.eval(p, cache) * det;
    }
    return total;
}

BForm BForm::interior(const BVectorField& X) const {
    if (degree_ == 0) throw PreconditionError("BForm::interior: degree 0");
    BForm r(chart_, degree_ - 1);
    for (const auto& [idx, c] : terms_) {
        for (size_t m = 0; m < idx.size(); ++m) {
            const Expr& xm = X.coeff(idx[m]);
            if (xm.is_zero()) continue;
            MultiIndex rest;
            rest.reserve(idx.size() - 1);
            for (size_t j = 0; j < idx.size(); ++j)
                if (j != m) rest.push_back(idx[j]);
            Expr term = Expr::mul(xm, c);
            r.add_term(std::move(rest), m % 2 == 0 ? term : -term);
        }
    }
    return r;
}

BForm BForm::restricted_to_z() const {
    if (!chart_.has_z()) return *this;
    BForm r(chart_, degree_);
    for (const auto& [idx, c] : terms_) r.add_term(idx, c.substitute(chart_.t_index(), 0.0));
    return r;
}

nlohmann::json BForm::to_json() const {
    nlohmann::json jterms = nlohmann::json::array();
    for (const auto& [idx, c] : terms_)
        jterms.push_back(nlohmann::json{{"slots", idx}, {"coeff", c.to_json()}});
    return nlohmann::json{{"degree", degree_}, {"terms", jterms}};
}

BForm BForm::from_json(const nlohmann::json& j, const Chart& chart) {
    try {
        BForm r(chart, j.at("degree").get<int>());
        for (const auto& t : j.at("terms"))
            r.add_term(t.at("slots").get<MultiIndex>(),
                       Expr::from_json(t.at("coeff"), chart.box()));
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("BForm::from_json: ") + e.what());
    }
}

BForm wedge(const BForm& a, const BForm& b) {
    if (!(a.chart() == b.chart())) throw PreconditionError("wedge: chart mismatch");
    if (a.degree() + b.degree() > a.chart().dim())
        throw PreconditionError("wedge: degree overflow");
    BForm r(a.chart(), a.degree() + b.degree());
    for (const auto& [ia, ca] : a.terms()) {
        for (const auto& [ib, cb] : b.terms()) {
            MultiIndex merged = ia;
            merged.insert(merged.end(), ib.begin(), ib.end());
            r.add_term(std::move(merged), Expr::mul(ca, cb));
        }
    }
    return r;
}

BForm b_differential(const Chart& chart, const BFunction& f) {
    if (f.c() != 0.0 && !chart.has_z())
        throw PreconditionError("b_differential: singular part on a chart without Z");
    BForm r(chart, 1);
    for (int i = 0; i < chart.dim(); ++i) {
        Expr gi = f.g().derivative(i);
        if (chart.has_z() && i == chart.t_index()) {
            // dt = t * (dt/t): fold the smooth dt-component into slot 0
            Expr slot0 = Expr::constant(f.c()) + Expr::mul(Expr::coord(i), gi);
            r.add_term({0}, slot0);
        } else {
            r.add_term({chart.slot_of_coord(i)}, gi);
        }
    }
    return r;
}

BForm exterior_d(const BForm& w) {
    if (w.degree() >= w.chart().dim())
        throw PreconditionError("exterior_d: degree would exceed dim");
    BForm r(w.chart(), w.degree() + 1);
    for (const auto& [idx, c] : w.terms()) {
        const BForm dc = b_differential(w.chart(), BFunction(c));
        for (const auto& [one, dca] : dc.terms()) {
            MultiIndex merged;
            merged.reserve(idx.size() + 1);
            merged.push_back(one[0]);
            merged.insert(merged.end(), idx.begin(), idx.end());
            r.add_term(std::move(merged), dca);
        }
    }
    return r;
}

BForm lie_derivative(const BForm& w, const BVectorField& X) {
    if (w.degree() == 0) {
        BForm df = exterior_d(w);
        return df.interior(X);
    }
    BForm d_ix = exterior_d(w.interior(X));
    if (w.degree() == w.chart().dim()) return d_ix;
    return d_ix + exterior_d(w).interior(X);
}

BVectorField::BVectorField(Chart chart, std::vector<Expr> coeffs)
    : chart_(std::move(chart)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != static_cast<size_t>(chart_.dim()))
        throw PreconditionError("BVectorField: need one coefficient per frame slot");
}

std::vector<double> BVectorField::eval_frame(const Point& p) const {
    Expr::Cache cache;
    std::vector<double> v(coeffs_.size());
    for (size_t i = 0; i < coeffs_.size(); ++i) v[i] = coeffs_[i].eval(p, cache);
    return v;
}

std::vector<double> BVectorField::eval_smooth(const Point& p) const {
    const std::vector<double> frame = eval_frame(p);
    std::vector<double> vel(static_cast<size_t>(chart_.dim()));
    for (int i = 0; i < chart_.dim(); ++i) {
        const int slot = chart_.slot_of_coord(i);
        double v = frame[static_cast<size_t>(slot)];
        if (chart_.has_z() && i == chart_.t_index()) {
            const double t = p[static_cast<size_t>(i)];
            v = (t == 0.0) ? 0.0 : t * v;   // exact tangency on Z
        }
        vel[static_cast<size_t>(i)] = v;
    }
    return vel;
}

BVectorField BVectorField::operator+(const BVectorField& o) const {
    std::vector<Expr> c(coeffs_.size());
    for (size_t i = 0; i < coeffs_.size(); ++i) c[i] = coeffs_[i] + o.coeffs_[i];
    return BVectorField(chart_, std::move(c));
}

BVectorField BVectorField::scaled(const Expr& s) const {
    std::vector<Expr> c(coeffs_.size());
    for (size_t i = 0; i < coeffs_.size(); ++i) c[i] = Expr::mul(s, coeffs_[i]);
    return BVectorField(chart_, std::move(c));
}

} // namespace bsym
