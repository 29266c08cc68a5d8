#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "projlim/cylinder.hpp"
#include "projlim/diagram.hpp"

namespace projlim {

/// Independent finite coordinates: coordinate i takes values 0..alphabet_sizes[i]-1
/// with probabilities weights[i]. Its projective limit is the Kolmogorov product measure.
class FiniteProductSystem {
public:
    FiniteProductSystem(std::vector<std::size_t> alphabet_sizes, std::vector<std::vector<double>> weights);

    /// n fair coins.
    static FiniteProductSystem coins(std::size_t n, double p_one = 0.5);

    std::size_t coordinates() const { return sizes_.size(); }
    const std::vector<std::size_t>& alphabet_sizes() const { return sizes_; }
    const std::vector<std::vector<double>>& weights() const { return weights_; }

    /// Outcome count at level n; throws GuardExceeded above kEnumerationLimit.
    std::size_t outcomes(Level n) const;
    /// Joint probabilities at level n, coordinate 1 most significant.
    DiscreteLaw law(Level n) const;

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::vector<double>> weights_;
};

inline constexpr std::size_t kEnumerationLimit = std::size_t{1} << 24;

/// A function of the first `level` coordinates given by its value on every outcome,
/// coordinate 1 most significant.
struct TableFunction {
    Level level = 1;
    std::vector<std::size_t> alphabet_sizes;
    std::vector<double> values;

    double at(std::span<const std::size_t> outcome) const;
};

/// Tabulates f on all level-n outcomes (n >= level(f)).
TableFunction tabulate(const CylinderFunction& f, const FiniteProductSystem& system, Level n);

/// Exact weighted sum of f over the level-n outcomes. The summation order is fixed,
/// so the result is reproducible bit for bit.
double brute_force_integral(const CylinderFunction& f, const FiniteProductSystem& system, Level n);
double brute_force_integral(const TableFunction& f, const FiniteProductSystem& system, Level n);

/// (sum_w |f|^p)^(1/p) over the level-n outcomes.
double brute_force_lp_norm(const TableFunction& f, const FiniteProductSystem& system, Level n, double p);

/// View of a level-k table at level m >= k (repeats each value across the new coordinates).
TableFunction pullback(const TableFunction& f, const FiniteProductSystem& system, Level m);

/// E[f | w_1..w_n]: partial average over coordinates n+1..level(f).
TableFunction discrete_conditional_expectation(const TableFunction& f, Level n, const FiniteProductSystem& system);
TableFunction discrete_conditional_expectation(const CylinderFunction& f, Level n, const FiniteProductSystem& system);

inline constexpr double kExactTolerance = 1e-14;

/// E_n(E_m(f)) == E_n(f) on every level-n outcome within kExactTolerance.
bool verify_tower(const CylinderFunction& f, const FiniteProductSystem& system, Level n, Level m);
bool verify_tower(const TableFunction& f, const FiniteProductSystem& system, Level n, Level m);

/// Chain of product laws up to `depth` for check_chain_consistency.
ProjectiveChain product_chain(const FiniteProductSystem& system);

/// Brute-force L^p distance usable with co_cauchy_check / family_equivalence.
LpDistance discrete_lp_distance(const FiniteProductSystem& system);

/// {"alphabet_sizes":[...], "weights":[[...], ...]}
FiniteProductSystem system_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FiniteProductSystem& system);

} // namespace projlim
