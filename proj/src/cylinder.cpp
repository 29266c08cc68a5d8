#include "projlim/cylinder.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

#include "projlim/error.hpp"

namespace projlim {

namespace {

Level body_support(const CylinderBody& body) {
    return std::visit(
        [](const auto& b) -> Level {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, Polynomial>) return b.support_level();
            else if constexpr (std::is_same_v<T, ExpPoly>) return b.exponent.support_level();
            else return std::max(b.factor.support_level(), b.weight.exponent.support_level());
        },
        body);
}

} // namespace

CylinderFunction::CylinderFunction(CylinderBody body)
    : body_(std::move(body)), level_(std::max<Level>(1, body_support(body_))) {}

CylinderFunction CylinderFunction::exp_neg(Polynomial exponent) {
    return CylinderFunction(CylinderBody{ExpPoly{std::move(exponent)}});
}

CylinderFunction CylinderFunction::product(Polynomial factor, Polynomial exponent) {
    return CylinderFunction(CylinderBody{PolyTimesExp{std::move(factor), ExpPoly{std::move(exponent)}}});
}

Level CylinderFunction::support_level() const { return body_support(body_); }

const Polynomial& CylinderFunction::polynomial() const {
    if (const auto* p = std::get_if<Polynomial>(&body_)) return *p;
    throw InvalidArgument("cylinder function body is not a polynomial");
}

bool CylinderFunction::is_constant() const {
    return std::visit(
        [](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, Polynomial>) return b.is_constant();
            else if constexpr (std::is_same_v<T, ExpPoly>) return b.exponent.is_constant();
            else return b.factor.is_constant() && b.weight.exponent.is_constant();
        },
        body_);
}

double CylinderFunction::operator()(std::span<const double> point) const {
    for (std::size_t i = 0; i < std::min<std::size_t>(point.size(), support_level()); ++i)
        if (!std::isfinite(point[i])) throw InvalidArgument("evaluation point has a non-finite entry");
    double v = std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, Polynomial>) return b(point);
            else if constexpr (std::is_same_v<T, ExpPoly>) return std::exp(-b.exponent(point));
            else return b.factor(point) * std::exp(-b.weight.exponent(point));
        },
        body_);
    if (!std::isfinite(v)) throw RangeError("cylinder function evaluation overflowed");
    return v;
}

CylinderFunction pullback(const CylinderFunction& f, Level m) {
    if (m < f.level())
        throw InvalidArgument("pullback to level " + std::to_string(m) + " below level " +
                              std::to_string(f.level()));
    CylinderFunction out = f;
    out.level_ = m;
    return out;
}

double evaluate(const CylinderFunction& f, std::span<const double> point) { return f(point); }

bool is_bounded_below_candidate(const Polynomial& p) {
    if (p.is_constant()) return true;
    const std::uint32_t top = p.degree();
    if (top % 2 != 0) return false;
    std::set<std::uint32_t> vars;
    for (const auto& [m, c] : p.terms())
        for (const auto& f : m.factors()) vars.insert(f.var);
    for (std::uint32_t v : vars) {
        auto it = p.terms().find(Monomial::variable(v, top));
        if (it == p.terms().end() || it->second <= 0.0) return false;
    }
    return true;
}

nlohmann::json to_json(const CylinderFunction& f) {
    nlohmann::json j = std::visit(
        [](const auto& b) -> nlohmann::json {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, Polynomial>) return {{"polynomial", to_json(b)}};
            else if constexpr (std::is_same_v<T, ExpPoly>) return {{"exp_neg", to_json(b.exponent)}};
            else return {{"polynomial", to_json(b.factor)}, {"exp_neg", to_json(b.weight.exponent)}};
        },
        f.body());
    j["level"] = f.level();
    return j;
}

CylinderFunction cylinder_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.contains("terms") || !(j.contains("polynomial") || j.contains("exp_neg")))
        return CylinderFunction(polynomial_from_json(j));
    for (const auto& [key, value] : j.items())
        if (key != "polynomial" && key != "exp_neg" && key != "level")
            throw InvalidArgument("cylinder function: unknown key '" + key + "'");
    std::optional<CylinderFunction> f;
    if (j.contains("polynomial") && j.contains("exp_neg"))
        f = CylinderFunction::product(polynomial_from_json(j.at("polynomial")),
                                      polynomial_from_json(j.at("exp_neg")));
    else if (j.contains("exp_neg"))
        f = CylinderFunction::exp_neg(polynomial_from_json(j.at("exp_neg")));
    else
        f = CylinderFunction(polynomial_from_json(j.at("polynomial")));
    if (j.contains("level")) {
        if (!j.at("level").is_number_integer() || j.at("level").get<long long>() < 1)
            throw InvalidArgument("cylinder function: 'level' must be a positive integer");
        return pullback(*f, j.at("level").get<Level>());
    }
    return *f;
}

} // namespace projlim
