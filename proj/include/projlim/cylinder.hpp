#pragma once

#include <span>
#include <variant>

#include <json.hpp>

#include "projlim/polynomial.hpp"

namespace projlim {

/// exp(-exponent)
struct ExpPoly {
    Polynomial exponent;
    bool operator==(const ExpPoly&) const = default;
};

/// factor * exp(-weight.exponent)
struct PolyTimesExp {
    Polynomial factor;
    ExpPoly weight;
    bool operator==(const PolyTimesExp&) const = default;
};

using CylinderBody = std::variant<Polynomial, ExpPoly, PolyTimesExp>;

/// A function of the first finitely many coordinates, viewed at some level of the chain.
///
/// The support level is always recomputed from the body. The view level starts at
/// max(1, support level) and only moves up through pullback().
class CylinderFunction {
public:
    CylinderFunction(CylinderBody body); // NOLINT(google-explicit-constructor)
    CylinderFunction(Polynomial p) : CylinderFunction(CylinderBody{std::move(p)}) {} // NOLINT

    static CylinderFunction exp_neg(Polynomial exponent);
    static CylinderFunction product(Polynomial factor, Polynomial exponent);

    /// Level at which this function is currently viewed.
    Level level() const { return level_; }
    /// Largest coordinate referenced by the body (0 for constants).
    Level support_level() const;

    const CylinderBody& body() const { return body_; }
    bool is_polynomial() const { return std::holds_alternative<Polynomial>(body_); }
    const Polynomial& polynomial() const;
    /// True when the body is a constant polynomial or exp of a constant.
    bool is_constant() const;

    /// Throws RangeError on overflow to a non-finite value.
    double operator()(std::span<const double> point) const;

    bool operator==(const CylinderFunction&) const = default;

    friend CylinderFunction pullback(const CylinderFunction& f, Level m);

private:
    CylinderBody body_;
    Level level_;
};

/// f viewed at level m >= level(f). The body is untouched.
CylinderFunction pullback(const CylinderFunction& f, Level m);

double evaluate(const CylinderFunction& f, std::span<const double> point);

/// Sufficient check that exp(-p) is integrable against a Gaussian on R^level:
/// even top degree whose top-degree part contains a positive pure power of every
/// variable that appears in the polynomial.
bool is_bounded_below_candidate(const Polynomial& p);

nlohmann::json to_json(const CylinderFunction& f);
/// {"polynomial":{...}} | {"exp_neg":{...}} | {"polynomial":{...},"exp_neg":{...}},
/// or a bare polynomial.
CylinderFunction cylinder_from_json(const nlohmann::json& j);

} // namespace projlim
