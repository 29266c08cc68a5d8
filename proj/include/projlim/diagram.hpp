#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "projlim/cylinder.hpp"

namespace projlim {

/// Level-n zero-mean Gaussian law, described by its covariance.
struct GaussianLaw {
    Eigen::MatrixXd covariance;
};

/// Joint law of the first n coordinates on a finite grid. Outcomes are laid out
/// with coordinate 1 most significant: index = ((w1 * K2 + w2) * K3 + w3) ...
struct DiscreteLaw {
    std::vector<std::size_t> alphabet_sizes;
    std::vector<double> probabilities;
};

using MarginalLaw = std::variant<GaussianLaw, DiscreteLaw>;

/// Coordinate projection from level `from` to level `to` <= from: keeps
/// source coordinates kept[0..to).
struct CoordinateProjection {
    Level from = 1;
    Level to = 1;
    std::vector<Level> kept; // 1-based source coordinate for each target coordinate

    bool operator==(const CoordinateProjection&) const = default;
};

/// restriction(n, m) for n <= m: drops coordinates n+1..m.
CoordinateProjection restriction(Level n, Level m);
/// outer o inner, i.e. first inner (k -> m), then outer (m -> n).
CoordinateProjection compose(const CoordinateProjection& outer, const CoordinateProjection& inner);

/// Finite prefix of a countable chain of levels with its marginals.
struct ProjectiveChain {
    Level max_level = 1;
    std::function<MarginalLaw(Level)> marginal_at;
};

struct ConsistencyFailure {
    std::array<Level, 3> triple{};
    std::string check; // "composition" | "identity" | "pushforward"
    double discrepancy = 0.0;
};

struct ConsistencyReport {
    bool passed = true;
    std::size_t checks = 0;
    std::vector<ConsistencyFailure> failures;
};

nlohmann::json to_json(const ConsistencyReport& report);

inline constexpr double kConsistencyTolerance = 1e-12;

/// For all n <= m <= k <= depth: restriction(n,n) is the identity,
/// restriction(n,k) = restriction(n,m) o restriction(m,k), and the marginal at m
/// pushes forward to the marginal at n (leading block / summed table).
/// Pushforward failures are reported with the triple (n, m, m).
/// A level whose law cannot be built is rethrown as LevelError.
ConsistencyReport check_chain_consistency(const ProjectiveChain& chain, Level depth);

/// Scalar net indexed by levels 1..size().
struct ScalarNet {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double at(Level n) const { return values.at(n - 1); }
};

struct NetLimit {
    double value;
    Level level; // level of the entry returned as the limit
};

/// Last entry of the first run of `window` consecutive entries that are pairwise
/// within tol; nullopt when no such run exists. Non-finite entries are an error.
std::optional<NetLimit> net_limit(const ScalarNet& net, double tol, std::size_t window);

/// Same as net_limit, but entries i and j count as within tolerance when
/// |v_i - v_j| <= max(tol, sigmas * sqrt(se_i^2 + se_j^2)).
std::optional<NetLimit> net_limit(const ScalarNet& net, std::span<const double> stderrs, double tol,
                                  double sigmas, std::size_t window);

/// One member per level: members[n-1] lives at level n.
struct CoCauchyFamily {
    std::vector<CylinderFunction> members;

    Level horizon() const { return members.size(); }
    const CylinderFunction& at(Level n) const { return members.at(n - 1); }
};

/// ||f - g||_p with both functions viewed at `level`.
using LpDistance = std::function<double(const CylinderFunction&, const CylinderFunction&, Level, double)>;

/// Pairwise distances d[n-1][m-1] = ||pullback(f_n, m) - f_m||_p for n <= m <= horizon.
std::vector<std::vector<double>> pullback_distances(const CoCauchyFamily& family, double p, Level horizon,
                                                    const LpDistance& distance);

/// Smallest l < horizon with ||pullback(f_n, m) - f_m||_p < eps for all l <= n <= m <= horizon.
/// The tail starting at l must contain at least one pair n < m, so l = horizon is
/// never reported.
std::optional<Level> co_cauchy_check(const CoCauchyFamily& family, double p, double eps, Level horizon,
                                     const LpDistance& distance);

/// f ~ g when the net n -> ||f_n - g_n||_p stabilizes (net_limit with tol and
/// `window`) and its deepest entry, at the horizon, is <= tol.
bool family_equivalence(const CoCauchyFamily& f, const CoCauchyFamily& g, double p, double tol, Level horizon,
                        const LpDistance& distance, std::size_t window = 3);

} // namespace projlim
