#include "projlim/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "projlim/error.hpp"

namespace projlim {

Monomial Monomial::variable(std::uint32_t var, std::uint32_t power) {
    Monomial m;
    if (power > 0) m.factors_.push_back({var, power});
    return m;
}

Monomial Monomial::from_dense(std::span<const std::uint32_t> exponents) {
    Monomial m;
    for (std::size_t i = 0; i < exponents.size(); ++i)
        if (exponents[i] > 0) m.factors_.push_back({static_cast<std::uint32_t>(i), exponents[i]});
    return m;
}

std::uint32_t Monomial::power_of(std::uint32_t var) const {
    auto it = std::lower_bound(factors_.begin(), factors_.end(), var,
                               [](const Factor& f, std::uint32_t v) { return f.var < v; });
    return (it != factors_.end() && it->var == var) ? it->power : 0;
}

std::uint32_t Monomial::degree() const {
    std::uint32_t d = 0;
    for (const auto& f : factors_) d += f.power;
    return d;
}

Level Monomial::support_level() const {
    return factors_.empty() ? 0 : factors_.back().var + 1;
}

std::vector<std::uint32_t> Monomial::dense() const {
    std::vector<std::uint32_t> out(support_level(), 0);
    for (const auto& f : factors_) out[f.var] = f.power;
    return out;
}

Monomial Monomial::operator*(const Monomial& other) const {
    Monomial out;
    out.factors_.reserve(factors_.size() + other.factors_.size());
    auto a = factors_.begin();
    auto b = other.factors_.begin();
    while (a != factors_.end() || b != other.factors_.end()) {
        if (b == other.factors_.end() || (a != factors_.end() && a->var < b->var)) {
            out.factors_.push_back(*a++);
        } else if (a == factors_.end() || b->var < a->var) {
            out.factors_.push_back(*b++);
        } else {
            out.factors_.push_back({a->var, a->power + b->power});
            ++a;
            ++b;
        }
    }
    return out;
}

std::strong_ordering Monomial::operator<=>(const Monomial& other) const {
    // First coordinate where the dense vectors differ decides; a missing
    // factor is an exponent of zero.
    auto a = factors_.begin();
    auto b = other.factors_.begin();
    while (a != factors_.end() && b != other.factors_.end()) {
        if (a->var < b->var) return std::strong_ordering::greater;
        if (b->var < a->var) return std::strong_ordering::less;
        if (a->power != b->power) return a->power <=> b->power;
        ++a;
        ++b;
    }
    if (a != factors_.end()) return std::strong_ordering::greater;
    if (b != other.factors_.end()) return std::strong_ordering::less;
    return std::strong_ordering::equal;
}

Polynomial Polynomial::constant(double c) {
    Polynomial p;
    p.add_term(Monomial{}, c);
    return p;
}

Polynomial Polynomial::variable(std::uint32_t var, double c, std::uint32_t power) {
    Polynomial p;
    p.add_term(Monomial::variable(var, power), c);
    return p;
}

Polynomial Polynomial::from_terms(std::span<const std::pair<Monomial, double>> terms) {
    Polynomial p;
    for (const auto& [m, c] : terms) p.add_term(m, c);
    return p;
}

bool Polynomial::is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_constant());
}

double Polynomial::constant_term() const {
    auto it = terms_.find(Monomial{});
    return it == terms_.end() ? 0.0 : it->second;
}

std::uint32_t Polynomial::degree() const {
    std::uint32_t d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
}

Level Polynomial::support_level() const {
    Level l = 0;
    for (const auto& [m, c] : terms_) l = std::max(l, m.support_level());
    return l;
}

void Polynomial::add_term(const Monomial& m, double c) {
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
    Polynomial out = *this;
    for (const auto& [m, c] : other.terms_) out.add_term(m, c);
    return out;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
    Polynomial out = *this;
    for (const auto& [m, c] : other.terms_) out.add_term(m, -c);
    return out;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
    Polynomial out;
    for (const auto& [ma, ca] : terms_)
        for (const auto& [mb, cb] : other.terms_) out.add_term(ma * mb, ca * cb);
    return out;
}

Polynomial Polynomial::scaled(double c) const {
    Polynomial out;
    if (c == 0.0) return out;
    for (const auto& [m, a] : terms_) out.add_term(m, a * c);
    return out;
}

Polynomial Polynomial::pow(std::uint32_t k) const {
    Polynomial result = constant(1.0);
    Polynomial base = *this;
    while (k > 0) {
        if (k & 1u) result = result * base;
        k >>= 1;
        if (k > 0) base = base * base;
    }
    return result;
}

double Polynomial::operator()(std::span<const double> point) const {
    if (point.size() < support_level())
        throw DimensionMismatch("polynomial of level " + std::to_string(support_level()) +
                                " evaluated at a point of length " + std::to_string(point.size()));
    double sum = 0.0;
    for (const auto& [m, c] : terms_) {
        double term = c;
        for (const auto& f : m.factors()) {
            double x = point[f.var];
            double xp = 1.0;
            for (std::uint32_t k = 0; k < f.power; ++k) xp *= x;
            term *= xp;
        }
        sum += term;
    }
    return sum;
}

nlohmann::json to_json(const Polynomial& p) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [m, c] : p.terms())
        terms.push_back({{"coeff", c}, {"exponents", m.dense()}});
    return {{"terms", terms}};
}

Polynomial polynomial_from_json(const nlohmann::json& j) {
    const nlohmann::json* terms = &j;
    if (j.is_object()) {
        for (const auto& [key, value] : j.items())
            if (key != "terms") throw InvalidArgument("polynomial: unknown key '" + key + "'");
        if (!j.contains("terms")) throw InvalidArgument("polynomial: missing 'terms'");
        terms = &j.at("terms");
    }
    if (!terms->is_array()) throw InvalidArgument("polynomial: 'terms' must be an array");

    Polynomial p;
    for (const auto& t : *terms) {
        if (!t.is_object()) throw InvalidArgument("polynomial: term must be an object");
        for (const auto& [key, value] : t.items())
            if (key != "coeff" && key != "exponents")
                throw InvalidArgument("polynomial: unknown term key '" + key + "'");
        if (!t.contains("coeff") || !t.at("coeff").is_number())
            throw InvalidArgument("polynomial: term needs a numeric 'coeff'");
        std::vector<std::uint32_t> exps;
        if (t.contains("exponents")) {
            const auto& e = t.at("exponents");
            if (!e.is_array()) throw InvalidArgument("polynomial: 'exponents' must be an array");
            for (const auto& k : e) {
                if (!k.is_number_integer() || k.get<long long>() < 0)
                    throw InvalidArgument("polynomial: exponents must be non-negative integers");
                exps.push_back(k.get<std::uint32_t>());
            }
        }
        double c = t.at("coeff").get<double>();
        if (!std::isfinite(c)) throw InvalidArgument("polynomial: non-finite coefficient");
        p.add_term(Monomial::from_dense(exps), c);
    }
    return p;
}

std::string to_string(const Polynomial& p) {
    if (p.is_zero()) return "0";
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (const auto& [m, c] : p.terms()) {
        if (!first) os << " + ";
        first = false;
        os << c;
        for (const auto& f : m.factors()) {
            os << "*x" << (f.var + 1);
            if (f.power > 1) os << "^" << f.power;
        }
    }
    return os.str();
}

} // namespace projlim
