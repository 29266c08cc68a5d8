#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "projlim/gaussian.hpp"
#include "projlim/integration.hpp"
#include "projlim/polynomial.hpp"

namespace projlim {

/// Periodic hypercubic lattice. Sites are numbered with direction 1 fastest:
/// site = c_1 + N c_2 (+ N^2 c_3 ...), and site s is coordinate x_{s+1} of the chain.
struct LatticeSpec {
    int dimension = 1;
    std::size_t sites_per_dim = 1;
    double spacing = 1.0;
    double mass = 1.0;
    /// Overall multiplier applied to C (physical normalization, 1 by default).
    double scale = 1.0;

    std::size_t sites() const;
    void validate() const;
};

inline constexpr std::size_t kMaxLatticeSites = 4096;

/// C = scale * (-Laplacian + m^2)^-1 with the periodic nearest-neighbour Laplacian
/// (eigenvalues sum_mu (2 - 2 cos(2 pi k_mu / N)) / a^2), evaluated spectrally.
CovarianceKernel free_covariance(const LatticeSpec& lattice);

/// Coefficients of f in the site-delta system; entry s multiplies x_{s+1}.
using TestFunction = std::vector<double>;

/// c(f, g) = f^T C g.
double pairing(const TestFunction& f, const TestFunction& g, const CovarianceKernel& kernel);

inline constexpr std::size_t kMaxSchwingerPoints = 12;

/// Free Schwinger function: 0 for odd k, else the sum over perfect matchings of
/// prod c(f_a, f_b).
double schwinger_free(const std::vector<TestFunction>& fs, const CovarianceKernel& kernel);

/// V = coupling * potential, with potential a polynomial bounded below.
struct InteractionSpec {
    Polynomial potential;
    double coupling = 0.0;

    /// coupling * sum over sites of x_{s+1}^degree.
    static InteractionSpec site_power(double coupling, std::uint32_t degree, const std::vector<std::size_t>& sites);

    Polynomial full() const { return potential.scaled(coupling); }
    void validate() const;
};

struct InteractingEstimate {
    IntegralEstimate correlation;   // <prod phi(f_i) e^{-V}> / <e^{-V}>, stderr via the delta method
    IntegralEstimate partition;     // Z_n = <e^{-V}>
};

/// phi(f) = sum_s f_s x_{s+1} as a polynomial.
Polynomial field_polynomial(const TestFunction& f);

/// Normalized Monte Carlo estimate at level n. Throws IllConditioned when Z_n is
/// within 5 stderr of zero.
InteractingEstimate schwinger_interacting(const std::vector<TestFunction>& fs, const InteractionSpec& interaction,
                                          const CovarianceKernel& kernel, Level n, std::size_t samples,
                                          std::uint64_t seed);

/// First-order expansion of e^{-V}:
///   S_free - coupling * (<prod phi(f_i) V0> - S_free <V0>), all moments by Wick.
double perturbative_oracle(const std::vector<TestFunction>& fs, const InteractionSpec& interaction,
                           const CovarianceKernel& kernel, Level n);

/// Magnitude of the second-order coefficient of the normalized expansion,
/// |<F V0^2>/2 - <F V0><V0> + S_free (<V0>^2 - <V0^2>/2)|, the scale of the first-order truncation error.
double second_order_scale(const std::vector<TestFunction>& fs, const InteractionSpec& interaction,
                          const CovarianceKernel& kernel, Level n);

/// {"type":"lattice","d":..,"n":..,"a":..,"m":..[,"scale":..]}
LatticeSpec lattice_from_json(const nlohmann::json& j);
/// {"lambda":..,"monomial_degree":..,"sites":[...]} (0-based sites)
InteractionSpec interaction_from_json(const nlohmann::json& j);

} // namespace projlim
