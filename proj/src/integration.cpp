#include "projlim/integration.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "projlim/error.hpp"

namespace projlim {

std::string to_string(Method m) { return m == Method::ExactWick ? "exact-wick" : "monte-carlo"; }

namespace {

struct RunningMoments {
    std::size_t count = 0;
    std::size_t non_finite = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double v) {
        if (!std::isfinite(v)) {
            ++non_finite;
            return;
        }
        ++count;
        const double delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (v - mean);
    }

    // Chan et al. pairwise merge; called in chunk order so the result is layout independent.
    void merge(const RunningMoments& o) {
        non_finite += o.non_finite;
        if (o.count == 0) return;
        if (count == 0) {
            const std::size_t nf = non_finite;
            *this = o;
            non_finite = nf;
            return;
        }
        const double n_a = static_cast<double>(count);
        const double n_b = static_cast<double>(o.count);
        const double delta = o.mean - mean;
        const double total = n_a + n_b;
        mean += delta * n_b / total;
        m2 += o.m2 + delta * delta * n_a * n_b / total;
        count += o.count;
    }
};

IntegralEstimate monte_carlo_mean(const GaussianMarginal& marginal, std::size_t samples, std::uint64_t seed,
                                  const std::function<double(std::span<const double>)>& integrand) {
    if (samples < 2) throw InvalidArgument("Monte Carlo needs at least 2 samples");
    const std::size_t chunks = (samples + kSampleChunk - 1) / kSampleChunk;
    std::vector<RunningMoments> partial(chunks);
    sample_chunks(marginal, samples, seed, [&](std::size_t chunk, const Eigen::MatrixXd& rows) {
        RunningMoments acc;
        std::vector<double> point(static_cast<std::size_t>(rows.cols()));
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            for (Eigen::Index c = 0; c < rows.cols(); ++c) point[static_cast<std::size_t>(c)] = rows(r, c);
            double v;
            try {
                v = integrand(point);
            } catch (const RangeError&) {
                v = std::numeric_limits<double>::quiet_NaN();
            }
            acc.push(v);
        }
        partial[chunk] = acc;
    });
    RunningMoments total;
    for (const auto& p : partial) total.merge(p);
    if (static_cast<double>(total.non_finite) > kMaxNonFiniteFraction * static_cast<double>(samples))
        throw NonFiniteSamples(std::to_string(total.non_finite) + " of " + std::to_string(samples) +
                               " Monte Carlo evaluations were non-finite");
    if (total.count < 2) throw NonFiniteSamples("too few finite Monte Carlo evaluations");
    const double n = static_cast<double>(total.count);
    return {total.mean, std::sqrt(total.m2 / (n - 1.0) / n), total.count, Method::MonteCarlo};
}

bool is_even_integer(double p) { return std::floor(p) == p && std::fmod(p, 2.0) == 0.0; }

void require_level(const CylinderFunction& f, const GaussianMarginal& marginal) {
    if (f.support_level() > marginal.n())
        throw DimensionMismatch("function of level " + std::to_string(f.support_level()) +
                                " integrated against a level-" + std::to_string(marginal.n()) + " marginal");
}

} // namespace

IntegralEstimate exact_polynomial_integral(const CylinderFunction& f, const GaussianMarginal& marginal) {
    require_level(f, marginal);
    WickEvaluator wick(marginal.covariance());
    return {wick.integrate(f.polynomial()), 0.0, 0, Method::ExactWick};
}

IntegralEstimate mc_integral(const CylinderFunction& f, const GaussianMarginal& marginal, std::size_t samples,
                             std::uint64_t seed) {
    require_level(f, marginal);
    if (f.is_constant()) {
        std::vector<double> origin(marginal.n(), 0.0);
        return {f(origin), 0.0, 0, Method::ExactWick};
    }
    return monte_carlo_mean(marginal, samples, seed, [&](std::span<const double> x) { return f(x); });
}

double lp_norm(const CylinderFunction& f, const GaussianMarginal& marginal, double p, const MonteCarloOptions& mc) {
    if (!(p >= 1.0)) throw InvalidArgument("p must be >= 1");
    require_level(f, marginal);
    if (f.is_polynomial() && is_even_integer(p)) {
        const auto power = static_cast<std::uint32_t>(p);
        if (static_cast<std::uint64_t>(f.polynomial().degree()) * power > kWickDegreeLimit)
            throw GuardExceeded("|f|^p has degree above the Wick limit");
        WickEvaluator wick(marginal.covariance());
        const double integral = wick.integrate(f.polynomial().pow(power));
        return std::pow(std::max(0.0, integral), 1.0 / p);
    }
    if (f.is_constant()) {
        std::vector<double> origin(marginal.n(), 0.0);
        return std::abs(f(origin));
    }
    const auto est = monte_carlo_mean(marginal, mc.samples, mc.seed,
                                      [&](std::span<const double> x) { return std::pow(std::abs(f(x)), p); });
    return std::pow(est.value, 1.0 / p);
}

LpDistance gaussian_lp_distance(const CovarianceKernel& kernel, const MonteCarloOptions& mc) {
    struct Cache {
        std::mutex mutex;
        std::map<Level, std::shared_ptr<const GaussianMarginal>> marginals;
    };
    auto cache = std::make_shared<Cache>();
    return [kernel, mc, cache](const CylinderFunction& f, const CylinderFunction& g, Level level, double p) {
        std::shared_ptr<const GaussianMarginal> marginal;
        {
            std::lock_guard lock(cache->mutex);
            auto& slot = cache->marginals[level];
            if (!slot) slot = std::make_shared<const GaussianMarginal>(build_marginal(kernel, level));
            marginal = slot;
        }
        if (f.is_polynomial() && g.is_polynomial())
            return lp_norm(pullback(CylinderFunction(f.polynomial() - g.polynomial()), level), *marginal, p, mc);
        if (!(p >= 1.0)) throw InvalidArgument("p must be >= 1");
        const auto est = monte_carlo_mean(*marginal, mc.samples, mc.seed, [&](std::span<const double> x) {
            return std::pow(std::abs(f(x) - g(x)), p);
        });
        return std::pow(est.value, 1.0 / p);
    };
}

CoCauchyFamily conditional_sequence(const CylinderFunction& f, const CovarianceKernel& kernel, Level horizon) {
    const Polynomial& body = f.polynomial();
    const Level level = std::max<Level>(1, body.support_level());
    if (horizon < level)
        throw InvalidArgument("horizon " + std::to_string(horizon) + " below level " + std::to_string(level));
    CoCauchyFamily family;
    family.members.reserve(horizon);
    const CylinderFunction base(body);
    if (level > 1) {
        const Eigen::MatrixXd covariance = build_marginal(kernel, level).covariance();
        for (Level n = 1; n < level; ++n)
            family.members.push_back(
                pullback(CylinderFunction(gaussian_conditional_expectation(body, n, covariance)), n));
    }
    for (Level n = level; n <= horizon; ++n) family.members.push_back(pullback(base, n));
    return family;
}

ConvergenceTable assess_rows(std::vector<ConvergenceRow> rows, double tol, std::size_t window) {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].level <= rows[i - 1].level) throw InvalidArgument("convergence rows must have increasing levels");
    ScalarNet net;
    std::vector<double> errors;
    for (const auto& r : rows) {
        net.values.push_back(r.estimate.value);
        errors.push_back(r.estimate.std_error);
    }
    ConvergenceTable table;
    table.rows = std::move(rows);
    if (auto limit = net_limit(net, errors, tol, kMonteCarloSigmas, window)) {
        table.limit = limit->value;
        table.converged_at = table.rows[limit->level - 1].level;
    }
    return table;
}

ConvergenceTable projective_limit_integral(const CylinderFunction& f, const CovarianceKernel& kernel, double tol,
                                           std::size_t window, Level horizon, const MonteCarloOptions& mc) {
    std::vector<ConvergenceRow> rows;
    if (f.is_polynomial()) {
        const CoCauchyFamily family = conditional_sequence(f, kernel, horizon);
        for (Level n = 1; n <= horizon; ++n) {
            try {
                rows.push_back({n, exact_polynomial_integral(family.at(n), build_marginal(kernel, n))});
            } catch (const Error& e) {
                throw LevelError(n, e.what());
            }
        }
    } else {
        const Level level = f.level();
        if (horizon < level)
            throw InvalidArgument("horizon " + std::to_string(horizon) + " below level " + std::to_string(level));
        for (Level n = level; n <= horizon; ++n) {
            try {
                rows.push_back({n, mc_integral(pullback(f, n), build_marginal(kernel, n), mc.samples, mc.seed + n)});
            } catch (const Error& e) {
                throw LevelError(n, e.what());
            }
        }
    }
    return assess_rows(std::move(rows), tol, window);
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string to_csv(const ConvergenceTable& table) {
    std::ostringstream os;
    os << "level,value,stderr,method\n";
    for (const auto& r : table.rows)
        os << r.level << ',' << format_double(r.estimate.value) << ',' << format_double(r.estimate.std_error) << ','
           << to_string(r.estimate.method) << '\n';
    return os.str();
}

nlohmann::json to_json(const IntegralEstimate& e) {
    return {{"value", e.value}, {"stderr", e.std_error}, {"samples", e.samples}, {"method", to_string(e.method)}};
}

nlohmann::json to_json(const ConvergenceTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        nlohmann::json row = to_json(r.estimate);
        row["level"] = r.level;
        rows.push_back(row);
    }
    nlohmann::json verdict;
    if (table.limit) verdict = {{"status", "converged"}, {"value", *table.limit}, {"level", *table.converged_at}};
    else verdict = {{"status", "not-converged"}};
    return {{"rows", rows}, {"verdict", verdict}};
}

} // namespace projlim
