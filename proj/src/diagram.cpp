#include "projlim/diagram.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "projlim/error.hpp"
#include "projlim/gaussian.hpp"

namespace projlim {

CoordinateProjection restriction(Level n, Level m) {
    if (n < 1 || n > m)
        throw InvalidArgument("restriction(" + std::to_string(n) + ", " + std::to_string(m) + ") needs 1 <= n <= m");
    CoordinateProjection p{m, n, {}};
    p.kept.reserve(n);
    for (Level i = 1; i <= n; ++i) p.kept.push_back(i);
    return p;
}

CoordinateProjection compose(const CoordinateProjection& outer, const CoordinateProjection& inner) {
    if (outer.from != inner.to)
        throw InvalidArgument("cannot compose projections: level " + std::to_string(inner.to) + " vs " +
                              std::to_string(outer.from));
    CoordinateProjection p{inner.from, outer.to, {}};
    p.kept.reserve(outer.kept.size());
    for (Level i : outer.kept) p.kept.push_back(inner.kept.at(i - 1));
    return p;
}

nlohmann::json to_json(const ConsistencyReport& report) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : report.failures)
        failures.push_back({{"triple", f.triple}, {"check", f.check}, {"discrepancy", f.discrepancy}});
    return {{"passed", report.passed}, {"checks", report.checks}, {"failures", failures}};
}

namespace {

MarginalLaw validated_law(const ProjectiveChain& chain, Level n) {
    try {
        MarginalLaw law = chain.marginal_at(n);
        if (auto* g = std::get_if<GaussianLaw>(&law)) {
            if (static_cast<Level>(g->covariance.rows()) != n)
                throw DimensionMismatch("Gaussian law has dimension " + std::to_string(g->covariance.rows()));
            build_marginal(g->covariance);
        } else {
            const auto& d = std::get<DiscreteLaw>(law);
            if (d.alphabet_sizes.size() != n)
                throw DimensionMismatch("discrete law has " + std::to_string(d.alphabet_sizes.size()) + " coordinates");
            std::size_t outcomes = 1;
            for (auto k : d.alphabet_sizes) outcomes *= k;
            if (outcomes != d.probabilities.size()) throw DimensionMismatch("discrete law table has the wrong size");
        }
        return law;
    } catch (const LevelError&) {
        throw;
    } catch (const Error& e) {
        throw LevelError(n, e.what());
    }
}

// Largest discrepancy between law_n and the pushforward of law_m under restriction(n, m).
double pushforward_discrepancy(const MarginalLaw& law_n, const MarginalLaw& law_m, Level n) {
    if (law_n.index() != law_m.index()) return std::numeric_limits<double>::infinity();
    if (const auto* gn = std::get_if<GaussianLaw>(&law_n)) {
        const auto& gm = std::get<GaussianLaw>(law_m);
        const auto k = static_cast<Eigen::Index>(n);
        return (gm.covariance.topLeftCorner(k, k) - gn->covariance).cwiseAbs().maxCoeff();
    }
    const auto& dn = std::get<DiscreteLaw>(law_n);
    const auto& dm = std::get<DiscreteLaw>(law_m);
    if (!std::equal(dn.alphabet_sizes.begin(), dn.alphabet_sizes.end(), dm.alphabet_sizes.begin()))
        return std::numeric_limits<double>::infinity();
    // Coordinate 1 is most significant, so each level-n outcome owns a contiguous block.
    const std::size_t block = dm.probabilities.size() / dn.probabilities.size();
    double worst = 0.0;
    for (std::size_t o = 0; o < dn.probabilities.size(); ++o) {
        double sum = 0.0;
        for (std::size_t r = 0; r < block; ++r) sum += dm.probabilities[o * block + r];
        worst = std::max(worst, std::abs(sum - dn.probabilities[o]));
    }
    return worst;
}

} // namespace

ConsistencyReport check_chain_consistency(const ProjectiveChain& chain, Level depth) {
    if (depth < 1 || depth > chain.max_level)
        throw InvalidArgument("depth " + std::to_string(depth) + " outside 1.." + std::to_string(chain.max_level));

    std::vector<MarginalLaw> laws;
    laws.reserve(depth);
    for (Level n = 1; n <= depth; ++n) laws.push_back(validated_law(chain, n));

    ConsistencyReport report;
    auto record = [&](std::array<Level, 3> triple, const char* check, double discrepancy) {
        ++report.checks;
        if (!(discrepancy <= kConsistencyTolerance)) {
            report.passed = false;
            report.failures.push_back({triple, check, discrepancy});
        }
    };

    for (Level n = 1; n <= depth; ++n) {
        CoordinateProjection id = restriction(n, n);
        bool is_identity = id.from == n && id.to == n;
        for (Level i = 1; i <= n && is_identity; ++i) is_identity = id.kept[i - 1] == i;
        record({n, n, n}, "identity", is_identity ? 0.0 : 1.0);

        for (Level m = n; m <= depth; ++m) {
            if (m > n) record({n, m, m}, "pushforward", pushforward_discrepancy(laws[n - 1], laws[m - 1], n));
            for (Level k = m; k <= depth; ++k) {
                const bool same = compose(restriction(n, m), restriction(m, k)) == restriction(n, k);
                record({n, m, k}, "composition", same ? 0.0 : 1.0);
            }
        }
    }
    return report;
}

namespace {

void require_finite(const ScalarNet& net) {
    for (std::size_t i = 0; i < net.size(); ++i)
        if (!std::isfinite(net.values[i])) throw NonFiniteNetEntry(i + 1);
}

template <typename Close>
std::optional<NetLimit> first_stable_window(const ScalarNet& net, std::size_t window, Close close) {
    if (window < 2) throw InvalidArgument("net window must be >= 2");
    if (net.size() < window)
        throw InvalidArgument("net has " + std::to_string(net.size()) + " entries, window needs " +
                              std::to_string(window));
    require_finite(net);
    for (std::size_t start = 0; start + window <= net.size(); ++start) {
        bool ok = true;
        for (std::size_t i = start; i < start + window && ok; ++i)
            for (std::size_t j = i + 1; j < start + window && ok; ++j) ok = close(i, j);
        if (ok) {
            const std::size_t last = start + window - 1;
            return NetLimit{net.values[last], last + 1};
        }
    }
    return std::nullopt;
}

} // namespace

std::optional<NetLimit> net_limit(const ScalarNet& net, double tol, std::size_t window) {
    if (!(tol > 0.0)) throw InvalidArgument("net tolerance must be positive");
    return first_stable_window(net, window, [&](std::size_t i, std::size_t j) {
        return std::abs(net.values[i] - net.values[j]) <= tol;
    });
}

std::optional<NetLimit> net_limit(const ScalarNet& net, std::span<const double> stderrs, double tol,
                                  double sigmas, std::size_t window) {
    if (stderrs.size() != net.size()) throw DimensionMismatch("one standard error per net entry required");
    if (!(tol > 0.0)) throw InvalidArgument("net tolerance must be positive");
    return first_stable_window(net, window, [&](std::size_t i, std::size_t j) {
        const double band = std::max(tol, sigmas * std::hypot(stderrs[i], stderrs[j]));
        return std::abs(net.values[i] - net.values[j]) <= band;
    });
}

std::vector<std::vector<double>> pullback_distances(const CoCauchyFamily& family, double p, Level horizon,
                                                    const LpDistance& distance) {
    if (horizon < 1 || horizon > family.horizon())
        throw InvalidArgument("family has " + std::to_string(family.horizon()) + " members, horizon " +
                              std::to_string(horizon) + " requested");
    if (!(p >= 1.0)) throw InvalidArgument("p must be >= 1");
    std::vector<std::vector<double>> d(horizon, std::vector<double>(horizon, 0.0));
    for (Level n = 1; n <= horizon; ++n) {
        for (Level m = n + 1; m <= horizon; ++m) {
            try {
                d[n - 1][m - 1] = distance(pullback(family.at(n), m), family.at(m), m, p);
            } catch (const LevelError&) {
                throw;
            } catch (const Error& e) {
                throw LevelError(n, e.what());
            }
        }
    }
    return d;
}

std::optional<Level> co_cauchy_check(const CoCauchyFamily& family, double p, double eps, Level horizon,
                                     const LpDistance& distance) {
    if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
    const auto d = pullback_distances(family, p, horizon, distance);
    // l must exceed every n that starts a failing pair.
    Level start = 1;
    for (Level n = 1; n <= horizon; ++n)
        for (Level m = n + 1; m <= horizon; ++m)
            if (!(d[n - 1][m - 1] < eps)) start = std::max(start, n + 1);
    if (start >= horizon) return std::nullopt;
    return start;
}

bool family_equivalence(const CoCauchyFamily& f, const CoCauchyFamily& g, double p, double tol, Level horizon,
                        const LpDistance& distance, std::size_t window) {
    if (horizon > f.horizon() || horizon > g.horizon())
        throw InvalidArgument("families are shorter than the requested horizon");
    ScalarNet net;
    net.values.reserve(horizon);
    for (Level n = 1; n <= horizon; ++n) {
        try {
            net.values.push_back(distance(f.at(n), g.at(n), n, p));
        } catch (const Error& e) {
            throw LevelError(n, e.what());
        }
    }
    const auto limit = net_limit(net, tol, window);
    return limit.has_value() && net.values.back() <= tol;
}

} // namespace projlim
