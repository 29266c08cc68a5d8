#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace projlim {

/// Position in the chain H_1 <= H_2 <= ... ; always >= 1 where a level is required.
using Level = std::size_t;

/// Sparse exponent vector. Variable v (0-based) stands for the coordinate x_{v+1}.
///
/// Ordering is lexicographic on the dense (zero-padded) exponent vectors, so the
/// canonical term order of a Polynomial does not depend on how a monomial was built.
class Monomial {
public:
    struct Factor {
        std::uint32_t var;
        std::uint32_t power;
        bool operator==(const Factor&) const = default;
    };

    Monomial() = default;

    /// x_{var+1}^power
    static Monomial variable(std::uint32_t var, std::uint32_t power = 1);
    /// Dense exponents: exponents[i] is the power of x_{i+1}.
    static Monomial from_dense(std::span<const std::uint32_t> exponents);

    std::uint32_t power_of(std::uint32_t var) const;
    std::uint32_t degree() const;
    /// Largest referenced coordinate (1-based), 0 for the constant monomial.
    Level support_level() const;
    bool is_constant() const { return factors_.empty(); }

    const std::vector<Factor>& factors() const { return factors_; }
    std::vector<std::uint32_t> dense() const;

    Monomial operator*(const Monomial& other) const;

    bool operator==(const Monomial&) const = default;
    std::strong_ordering operator<=>(const Monomial& other) const;

private:
    std::vector<Factor> factors_; // sorted by var, powers > 0
};

/// Sparse multivariate polynomial with real coefficients. Never stores a zero
/// coefficient; terms are kept in canonical Monomial order.
class Polynomial {
public:
    using TermMap = std::map<Monomial, double>;

    Polynomial() = default;
    static Polynomial constant(double c);
    /// c * x_{var+1}^power
    static Polynomial variable(std::uint32_t var, double c = 1.0, std::uint32_t power = 1);
    static Polynomial from_terms(std::span<const std::pair<Monomial, double>> terms);

    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const;
    double constant_term() const;
    std::uint32_t degree() const;
    Level support_level() const;

    void add_term(const Monomial& m, double c);

    Polynomial operator+(const Polynomial& other) const;
    Polynomial operator-(const Polynomial& other) const;
    Polynomial operator*(const Polynomial& other) const;
    Polynomial operator-() const { return scaled(-1.0); }
    Polynomial scaled(double c) const;
    Polynomial pow(std::uint32_t k) const;

    /// Evaluates at `point`; point[i] is the value of x_{i+1}.
    double operator()(std::span<const double> point) const;

    bool operator==(const Polynomial&) const = default;

private:
    TermMap terms_;
};

inline Polynomial add(const Polynomial& a, const Polynomial& b) { return a + b; }
inline Polynomial mul(const Polynomial& a, const Polynomial& b) { return a * b; }
inline Polynomial scale(const Polynomial& a, double c) { return a.scaled(c); }

/// JSON form: {"terms":[{"coeff":c,"exponents":[k1,k2,...]}, ...]} in canonical order.
nlohmann::json to_json(const Polynomial& p);
/// Accepts the object form above or a bare array of term records.
Polynomial polynomial_from_json(const nlohmann::json& j);

std::string to_string(const Polynomial& p);

} // namespace projlim
