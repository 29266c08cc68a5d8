#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "projlim/cylinder.hpp"
#include "projlim/error.hpp"
#include "projlim/polynomial.hpp"

using namespace projlim;

namespace {

Polynomial x(std::uint32_t i, std::uint32_t power = 1) { return Polynomial::variable(i - 1, 1.0, power); }

} // namespace

TEST_CASE("poly ops: product, cancellation, zero scale") {
    CHECK(x(1) * x(1) == x(1, 2));
    CHECK((x(1) + x(2)) + (-x(2)) == x(1));
    CHECK(scale(x(1), 0.0).is_zero());
    CHECK(scale(x(1), 0.0).terms().empty());
}

TEST_CASE("monomial order is lexicographic on dense exponents") {
    const std::vector<std::vector<std::uint32_t>> dense = {{}, {0, 0, 1}, {0, 1}, {0, 1, 1}, {1}, {1, 0, 3}, {1, 1}, {2}};
    for (std::size_t i = 0; i + 1 < dense.size(); ++i) {
        auto a = Monomial::from_dense(dense[i]);
        auto b = Monomial::from_dense(dense[i + 1]);
        CHECK(a < b);
        CHECK(std::lexicographical_compare(dense[i].begin(), dense[i].end(), dense[i + 1].begin(), dense[i + 1].end()));
    }
    CHECK(Monomial::from_dense(std::vector<std::uint32_t>{1, 0, 0}) == Monomial::from_dense(std::vector<std::uint32_t>{1}));
}

TEST_CASE("evaluate") {
    const std::vector<double> p12{1.0, 2.0};
    CHECK(evaluate(CylinderFunction(x(1) + x(2)), p12) == 3.0);
    const std::vector<double> zero{0.0};
    CHECK(evaluate(CylinderFunction::exp_neg(x(1, 2)), zero) == 1.0);
    const std::vector<double> two{2.0};
    CHECK(evaluate(CylinderFunction(x(1, 3).scaled(2.0)), two) == 16.0);
}

TEST_CASE("evaluate reports overflow as a range error") {
    const std::vector<double> big{1e200};
    CHECK_THROWS_AS(evaluate(CylinderFunction(x(1, 2)), big), RangeError);
    const std::vector<double> neg{-30.0};
    CHECK_THROWS_AS(evaluate(CylinderFunction::exp_neg(x(1, 3)), neg), RangeError);
}

TEST_CASE("evaluate rejects short points") {
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(evaluate(CylinderFunction(x(2)), one), DimensionMismatch);
}

TEST_CASE("pullback") {
    CylinderFunction f(x(1, 2));
    auto g = pullback(f, 3);
    CHECK(g.level() == 3);
    CHECK(g.polynomial() == f.polynomial());

    CylinderFunction one(Polynomial::constant(1.0));
    CHECK(one.level() == 1);
    CHECK(pullback(one, 5).level() == 5);
    CHECK(pullback(one, 5).polynomial() == Polynomial::constant(1.0));

    CylinderFunction h(x(1) * x(2));
    CHECK(pullback(h, 2) == h);

    CHECK_THROWS_AS(pullback(h, 1), InvalidArgument);
}

TEST_CASE("level is recomputed from the body") {
    CylinderFunction f(x(3) + x(1, 4));
    CHECK(f.level() == 3);
    CHECK(f.support_level() == 3);
    nlohmann::json j = to_json(f);
    j["level"] = 7;
    CHECK(cylinder_from_json(j).level() == 7);
    j["level"] = 1; // below the support: rejected
    CHECK_THROWS(cylinder_from_json(j));
}

TEST_CASE("property: evaluate is an algebra homomorphism and respects pullback") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int trial = 0; trial < 200; ++trial) {
        const Polynomial p = oracle::random_polynomial(3, 4, 5, rng);
        const Polynomial q = oracle::random_polynomial(4, 3, 4, rng);
        const double c = u(rng);
        std::vector<double> pt(6);
        for (auto& v : pt) v = u(rng);
        const double pp = p(pt);
        const double qq = q(pt);
        CHECK((p + q)(pt) == doctest::Approx(pp + qq).epsilon(1e-12));
        CHECK((p * q)(pt) == doctest::Approx(pp * qq).epsilon(1e-12));
        CHECK(p.scaled(c)(pt) == doctest::Approx(c * pp).epsilon(1e-12));
        const CylinderFunction f(p);
        CHECK(evaluate(pullback(f, 6), pt) == pp);
        CHECK(f.support_level() == p.support_level());
    }
}

TEST_CASE("json serialization is canonical and round-trips") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Polynomial p = oracle::random_polynomial(4, 5, 6, rng);
        const auto j = to_json(p);
        CHECK(polynomial_from_json(j) == p);
        CHECK(to_json(polynomial_from_json(j)).dump() == j.dump());
    }
    CHECK_THROWS_AS(polynomial_from_json(nlohmann::json::parse(R"({"terms":[{"coeff":1,"exps":[1]}]})")),
                    InvalidArgument);
    CHECK_THROWS_AS(polynomial_from_json(nlohmann::json::parse(R"({"terms":[{"coeff":1,"exponents":[-1]}]})")),
                    InvalidArgument);
}

TEST_CASE("bounded-below check") {
    CHECK(is_bounded_below_candidate(x(1, 4) + x(2, 4) + x(1) * x(2)));
    CHECK_FALSE(is_bounded_below_candidate(x(1, 3)));
    CHECK_FALSE(is_bounded_below_candidate(x(1, 4).scaled(-1.0)));
    CHECK_FALSE(is_bounded_below_candidate(x(1, 4) + x(1) * x(2, 3))); // x2 lacks a pure quartic
}
