#include "projlim/discrete.hpp"

#include <algorithm>
#include <cmath>

#include "projlim/error.hpp"

namespace projlim {

namespace {

// Visits every outcome of the given coordinate sizes in table order, passing
// the digits and the flat index.
template <typename Visit>
void for_each_outcome(std::span<const std::size_t> sizes, Visit visit) {
    std::vector<std::size_t> digits(sizes.size(), 0);
    std::size_t total = 1;
    for (auto k : sizes) total *= k;
    for (std::size_t index = 0; index < total; ++index) {
        visit(std::span<const std::size_t>(digits), index);
        for (std::size_t pos = digits.size(); pos-- > 0;) {
            if (++digits[pos] < sizes[pos]) break;
            digits[pos] = 0;
        }
    }
}

std::vector<double> coordinate_probabilities(const FiniteProductSystem& system, Level from, Level to) {
    std::span<const std::size_t> sizes(system.alphabet_sizes().data() + from, to - from);
    std::vector<double> probs;
    for_each_outcome(sizes, [&](std::span<const std::size_t> digits, std::size_t) {
        double p = 1.0;
        for (std::size_t i = 0; i < digits.size(); ++i) p *= system.weights()[from + i][digits[i]];
        probs.push_back(p);
    });
    return probs;
}

void check_level(const FiniteProductSystem& system, Level n) {
    if (n < 1 || n > system.coordinates())
        throw InvalidArgument("level " + std::to_string(n) + " outside 1.." + std::to_string(system.coordinates()));
}

} // namespace

FiniteProductSystem::FiniteProductSystem(std::vector<std::size_t> alphabet_sizes,
                                         std::vector<std::vector<double>> weights)
    : sizes_(std::move(alphabet_sizes)), weights_(std::move(weights)) {
    if (sizes_.empty()) throw InvalidArgument("finite system needs at least one coordinate");
    if (weights_.size() != sizes_.size()) throw DimensionMismatch("one weight vector per coordinate required");
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
        if (sizes_[i] < 2) throw InvalidArgument("alphabet sizes must be >= 2");
        if (weights_[i].size() != sizes_[i])
            throw DimensionMismatch("coordinate " + std::to_string(i + 1) + " has " +
                                    std::to_string(weights_[i].size()) + " weights for " +
                                    std::to_string(sizes_[i]) + " symbols");
        double sum = 0.0;
        for (double w : weights_[i]) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("weights must be finite and non-negative");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-15)
            throw InvalidArgument("weights of coordinate " + std::to_string(i + 1) + " sum to " + std::to_string(sum));
    }
}

FiniteProductSystem FiniteProductSystem::coins(std::size_t n, double p_one) {
    return FiniteProductSystem(std::vector<std::size_t>(n, 2),
                               std::vector<std::vector<double>>(n, std::vector<double>{1.0 - p_one, p_one}));
}

std::size_t FiniteProductSystem::outcomes(Level n) const {
    check_level(*this, n);
    std::size_t total = 1;
    for (Level i = 0; i < n; ++i) {
        total *= sizes_[i];
        if (total > kEnumerationLimit)
            throw GuardExceeded("level " + std::to_string(n) + " has more than 2^24 outcomes");
    }
    return total;
}

DiscreteLaw FiniteProductSystem::law(Level n) const {
    outcomes(n);
    return {std::vector<std::size_t>(sizes_.begin(), sizes_.begin() + static_cast<std::ptrdiff_t>(n)),
            coordinate_probabilities(*this, 0, n)};
}

double TableFunction::at(std::span<const std::size_t> outcome) const {
    if (outcome.size() < level) throw DimensionMismatch("outcome shorter than table level");
    std::size_t index = 0;
    for (Level i = 0; i < level; ++i) index = index * alphabet_sizes[i] + outcome[i];
    return values.at(index);
}

TableFunction tabulate(const CylinderFunction& f, const FiniteProductSystem& system, Level n) {
    if (n < f.support_level())
        throw InvalidArgument("cannot tabulate a level-" + std::to_string(f.support_level()) + " function at level " +
                              std::to_string(n));
    const std::size_t total = system.outcomes(n);
    TableFunction t{n, std::vector<std::size_t>(system.alphabet_sizes().begin(),
                                                system.alphabet_sizes().begin() + static_cast<std::ptrdiff_t>(n)),
                    {}};
    t.values.reserve(total);
    std::vector<double> point(n);
    for_each_outcome(t.alphabet_sizes, [&](std::span<const std::size_t> digits, std::size_t) {
        for (Level i = 0; i < n; ++i) point[i] = static_cast<double>(digits[i]);
        t.values.push_back(f(point));
    });
    return t;
}

double brute_force_integral(const CylinderFunction& f, const FiniteProductSystem& system, Level n) {
    return brute_force_integral(tabulate(f, system, n), system, n);
}

double brute_force_integral(const TableFunction& f, const FiniteProductSystem& system, Level n) {
    const TableFunction g = pullback(f, system, n);
    const std::vector<double> probs = coordinate_probabilities(system, 0, n);
    double sum = 0.0;
    for (std::size_t o = 0; o < probs.size(); ++o) sum += probs[o] * g.values[o];
    return sum;
}

double brute_force_lp_norm(const TableFunction& f, const FiniteProductSystem& system, Level n, double p) {
    if (!(p >= 1.0)) throw InvalidArgument("p must be >= 1");
    const TableFunction g = pullback(f, system, n);
    const std::vector<double> probs = coordinate_probabilities(system, 0, n);
    double sum = 0.0;
    for (std::size_t o = 0; o < probs.size(); ++o) sum += probs[o] * std::pow(std::abs(g.values[o]), p);
    return std::pow(sum, 1.0 / p);
}

TableFunction pullback(const TableFunction& f, const FiniteProductSystem& system, Level m) {
    if (m < f.level) throw InvalidArgument("pullback below the table level");
    const std::size_t total = system.outcomes(m);
    const std::size_t block = total / f.values.size();
    TableFunction out{m,
                      std::vector<std::size_t>(system.alphabet_sizes().begin(),
                                               system.alphabet_sizes().begin() + static_cast<std::ptrdiff_t>(m)),
                      {}};
    out.values.reserve(total);
    for (double v : f.values) out.values.insert(out.values.end(), block, v);
    return out;
}

TableFunction discrete_conditional_expectation(const TableFunction& f, Level n, const FiniteProductSystem& system) {
    check_level(system, n);
    if (n >= f.level) return pullback(f, system, n);
    const std::size_t head = system.outcomes(n);
    const std::vector<double> tail = coordinate_probabilities(system, n, f.level);
    TableFunction out{n,
                      std::vector<std::size_t>(system.alphabet_sizes().begin(),
                                               system.alphabet_sizes().begin() + static_cast<std::ptrdiff_t>(n)),
                      std::vector<double>(head, 0.0)};
    for (std::size_t o = 0; o < head; ++o) {
        double sum = 0.0;
        for (std::size_t r = 0; r < tail.size(); ++r) sum += tail[r] * f.values[o * tail.size() + r];
        out.values[o] = sum;
    }
    return out;
}

TableFunction discrete_conditional_expectation(const CylinderFunction& f, Level n, const FiniteProductSystem& system) {
    const Level m = std::max<Level>(f.level(), n);
    return discrete_conditional_expectation(tabulate(f, system, m), n, system);
}

bool verify_tower(const TableFunction& f, const FiniteProductSystem& system, Level n, Level m) {
    if (n > m || m > f.level)
        throw InvalidArgument("tower check needs n <= m <= level(f)");
    const TableFunction direct = discrete_conditional_expectation(f, n, system);
    const TableFunction nested = discrete_conditional_expectation(discrete_conditional_expectation(f, m, system), n, system);
    for (std::size_t o = 0; o < direct.values.size(); ++o)
        if (!(std::abs(direct.values[o] - nested.values[o]) <= kExactTolerance)) return false;
    return true;
}

bool verify_tower(const CylinderFunction& f, const FiniteProductSystem& system, Level n, Level m) {
    return verify_tower(tabulate(f, system, f.level()), system, n, m);
}

ProjectiveChain product_chain(const FiniteProductSystem& system) {
    return {system.coordinates(), [system](Level n) -> MarginalLaw { return system.law(n); }};
}

LpDistance discrete_lp_distance(const FiniteProductSystem& system) {
    return [system](const CylinderFunction& f, const CylinderFunction& g, Level level, double p) {
        TableFunction a = tabulate(f, system, level);
        const TableFunction b = tabulate(g, system, level);
        for (std::size_t o = 0; o < a.values.size(); ++o) a.values[o] -= b.values[o];
        return brute_force_lp_norm(a, system, level, p);
    };
}

FiniteProductSystem system_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidArgument("system must be an object");
    for (const auto& [key, value] : j.items())
        if (key != "alphabet_sizes" && key != "weights")
            throw InvalidArgument("system: unknown key '" + key + "'");
    if (!j.contains("alphabet_sizes") || !j.contains("weights"))
        throw InvalidArgument("system needs 'alphabet_sizes' and 'weights'");
    try {
        return FiniteProductSystem(j.at("alphabet_sizes").get<std::vector<std::size_t>>(),
                                   j.at("weights").get<std::vector<std::vector<double>>>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("system: ") + e.what());
    }
}

nlohmann::json to_json(const FiniteProductSystem& system) {
    return {{"alphabet_sizes", system.alphabet_sizes()}, {"weights", system.weights()}};
}

} // namespace projlim
