#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "projlim/cylinder.hpp"
#include "projlim/diagram.hpp"
#include "projlim/gaussian.hpp"

namespace projlim {

enum class Method { ExactWick, MonteCarlo };

std::string to_string(Method m);

struct IntegralEstimate {
    double value = 0.0;
    double std_error = 0.0; // zero exactly when method == ExactWick
    std::size_t samples = 0;
    Method method = Method::ExactWick;
};

/// Sum of Wick moments over the terms of a polynomial f with level(f) <= marginal.n().
IntegralEstimate exact_polynomial_integral(const CylinderFunction& f, const GaussianMarginal& marginal);

/// Fraction of non-finite evaluations above which mc_integral fails.
inline constexpr double kMaxNonFiniteFraction = 1e-3;

/// Sample mean over `samples` draws with stderr = sample std / sqrt(samples).
/// Non-finite evaluations are dropped and counted; constant f returns its value exactly.
IntegralEstimate mc_integral(const CylinderFunction& f, const GaussianMarginal& marginal, std::size_t samples,
                             std::uint64_t seed);

struct MonteCarloOptions {
    std::size_t samples = 200000;
    std::uint64_t seed = 0;
};

/// (integral of |f|^p)^(1/p). Exact for polynomial f and even integer p, Monte Carlo otherwise.
double lp_norm(const CylinderFunction& f, const GaussianMarginal& marginal, double p,
               const MonteCarloOptions& mc = {});

/// Distance for co_cauchy_check / family_equivalence under build_marginal(kernel, level).
LpDistance gaussian_lp_distance(const CovarianceKernel& kernel, const MonteCarloOptions& mc = {});

/// f_n = E_n(f) for n < level(f) and f_n = pullback(f, n) from level(f) on, n = 1..horizon.
CoCauchyFamily conditional_sequence(const CylinderFunction& f, const CovarianceKernel& kernel, Level horizon);

struct ConvergenceRow {
    Level level;
    IntegralEstimate estimate;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    std::optional<double> limit; // nullopt: not converged
    std::optional<Level> converged_at;

    bool converged() const { return limit.has_value(); }
};

/// Exact rows use `tol`; Monte Carlo rows are compared within max(tol, 5 * combined stderr).
inline constexpr double kMonteCarloSigmas = 5.0;

/// Rows are the integrals of f_n against build_marginal(kernel, n) for n = 1..horizon,
/// the verdict comes from net_limit(tol, window). Polynomial f is integrated exactly
/// along conditional_sequence. Other bodies have no closed-form conditional expectation:
/// their rows start at level(f) and are Monte Carlo estimates of the pulled-back f.
ConvergenceTable projective_limit_integral(const CylinderFunction& f, const CovarianceKernel& kernel, double tol,
                                           std::size_t window, Level horizon, const MonteCarloOptions& mc = {});

/// Table from a pre-computed list of rows (used for synthetic nets).
ConvergenceTable assess_rows(std::vector<ConvergenceRow> rows, double tol, std::size_t window);

/// "level,value,stderr,method" with 17 significant digits.
std::string to_csv(const ConvergenceTable& table);
nlohmann::json to_json(const ConvergenceTable& table);
nlohmann::json to_json(const IntegralEstimate& estimate);

} // namespace projlim
