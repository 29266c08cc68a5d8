#include "projlim/qft.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>

#include "projlim/error.hpp"

namespace projlim {

std::size_t LatticeSpec::sites() const {
    std::size_t total = 1;
    for (int mu = 0; mu < dimension; ++mu) total *= sites_per_dim;
    return total;
}

void LatticeSpec::validate() const {
    if (dimension != 1 && dimension != 2) throw InvalidArgument("lattice dimension must be 1 or 2");
    if (sites_per_dim < 1) throw InvalidArgument("lattice needs at least one site per direction");
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InvalidArgument("lattice spacing must be positive");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("lattice mass must be positive");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("lattice scale must be positive");
    if (sites_per_dim > kMaxLatticeSites || sites() > kMaxLatticeSites)
        throw GuardExceeded("lattice has more than " + std::to_string(kMaxLatticeSites) + " sites");
}

CovarianceKernel free_covariance(const LatticeSpec& lattice) {
    lattice.validate();
    const std::size_t n = lattice.sites_per_dim;
    const std::size_t volume = lattice.sites();
    const double m2 = lattice.mass * lattice.mass;
    const double inv_a2 = 1.0 / (lattice.spacing * lattice.spacing);

    std::vector<double> cosines(n);
    for (std::size_t j = 0; j < n; ++j) cosines[j] = std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / n);

    auto digits = [&](std::size_t site) {
        std::array<std::size_t, 2> c{0, 0};
        for (int mu = 0; mu < lattice.dimension; ++mu) {
            c[mu] = site % n;
            site /= n;
        }
        return c;
    };

    // Propagator in momentum space: 1 / (lattice momentum^2 + m^2).
    std::vector<double> propagator(volume);
    for (std::size_t k = 0; k < volume; ++k) {
        const auto kc = digits(k);
        double p2 = 0.0;
        for (int mu = 0; mu < lattice.dimension; ++mu) p2 += (2.0 - 2.0 * cosines[kc[mu]]) * inv_a2;
        propagator[k] = 1.0 / (p2 + m2);
    }

    TranslationInvariantTable table{lattice.dimension, n, std::vector<double>(volume, 0.0)};
    for (std::size_t r = 0; r < volume; ++r) {
        const auto rc = digits(r);
        double sum = 0.0;
        for (std::size_t k = 0; k < volume; ++k) {
            const auto kc = digits(k);
            std::size_t phase = 0;
            for (int mu = 0; mu < lattice.dimension; ++mu) phase += kc[mu] * rc[mu];
            sum += cosines[phase % n] * propagator[k];
        }
        table.by_displacement[r] = lattice.scale * sum / static_cast<double>(volume);
    }
    return CovarianceKernel::lattice(std::move(table));
}

namespace {

void check_test_function(const TestFunction& f, const CovarianceKernel& kernel) {
    if (f.empty()) throw DimensionMismatch("empty test function");
    if (f.size() > kernel.max_level())
        throw DimensionMismatch("test function has " + std::to_string(f.size()) + " entries, kernel covers " +
                                std::to_string(kernel.max_level()));
    for (double v : f)
        if (!std::isfinite(v)) throw InvalidArgument("test function has a non-finite entry");
}

void check_family(const std::vector<TestFunction>& fs, const CovarianceKernel& kernel) {
    if (fs.size() > kMaxSchwingerPoints)
        throw GuardExceeded("at most " + std::to_string(kMaxSchwingerPoints) + " test functions supported");
    for (const auto& f : fs) {
        check_test_function(f, kernel);
        if (f.size() != fs.front().size()) throw DimensionMismatch("test functions live on different lattices");
    }
    if (std::holds_alternative<TranslationInvariantTable>(kernel.source()) && !fs.empty() &&
        fs.front().size() != kernel.max_level())
        throw DimensionMismatch("test functions have " + std::to_string(fs.front().size()) +
                                " entries, lattice has " + std::to_string(kernel.max_level()) + " sites");
}

Level support_of(const TestFunction& f) {
    for (std::size_t s = f.size(); s-- > 0;)
        if (f[s] != 0.0) return s + 1;
    return 0;
}

double hafnian(const Eigen::MatrixXd& gram, unsigned remaining) {
    if (remaining == 0) return 1.0;
    const int first = std::countr_zero(remaining);
    const unsigned rest = remaining & ~(1u << first);
    double sum = 0.0;
    for (unsigned bits = rest; bits != 0; bits &= bits - 1) {
        const int partner = std::countr_zero(bits);
        sum += gram(first, partner) * hafnian(gram, rest & ~(1u << partner));
    }
    return sum;
}

Polynomial product_of_fields(const std::vector<TestFunction>& fs) {
    Polynomial product = Polynomial::constant(1.0);
    for (const auto& f : fs) product = product * field_polynomial(f);
    return product;
}

} // namespace

double pairing(const TestFunction& f, const TestFunction& g, const CovarianceKernel& kernel) {
    check_test_function(f, kernel);
    check_test_function(g, kernel);
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == 0.0) continue;
        for (std::size_t j = 0; j < g.size(); ++j)
            if (g[j] != 0.0) sum += f[i] * kernel.entry(i + 1, j + 1) * g[j];
    }
    return sum;
}

double schwinger_free(const std::vector<TestFunction>& fs, const CovarianceKernel& kernel) {
    check_family(fs, kernel);
    if (fs.size() % 2 != 0) return 0.0;
    const auto k = static_cast<Eigen::Index>(fs.size());
    Eigen::MatrixXd gram(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = a; b < k; ++b) gram(a, b) = gram(b, a) = pairing(fs[a], fs[b], kernel);
    return hafnian(gram, (1u << k) - 1u);
}

InteractionSpec InteractionSpec::site_power(double coupling, std::uint32_t degree, const std::vector<std::size_t>& sites) {
    InteractionSpec spec;
    spec.coupling = coupling;
    for (std::size_t s : sites) spec.potential.add_term(Monomial::variable(static_cast<std::uint32_t>(s), degree), 1.0);
    spec.validate();
    return spec;
}

void InteractionSpec::validate() const {
    if (!(coupling >= 0.0) || !std::isfinite(coupling)) throw InvalidArgument("coupling must be finite and >= 0");
    if (!is_bounded_below_candidate(potential))
        throw InvalidArgument("interaction potential is not bounded below (needs even top degree with positive "
                              "pure powers of every variable)");
}

Polynomial field_polynomial(const TestFunction& f) {
    Polynomial p;
    for (std::size_t s = 0; s < f.size(); ++s) p.add_term(Monomial::variable(static_cast<std::uint32_t>(s)), f[s]);
    return p;
}

InteractingEstimate schwinger_interacting(const std::vector<TestFunction>& fs, const InteractionSpec& interaction,
                                          const CovarianceKernel& kernel, Level n, std::size_t samples,
                                          std::uint64_t seed) {
    check_family(fs, kernel);
    interaction.validate();
    if (samples < 2) throw InvalidArgument("need at least 2 samples");
    if (interaction.potential.support_level() > n)
        throw InvalidArgument("interaction reaches level " + std::to_string(interaction.potential.support_level()) +
                              " above n = " + std::to_string(n));
    for (const auto& f : fs)
        if (support_of(f) > n)
            throw InvalidArgument("test function supported beyond level " + std::to_string(n));

    const GaussianMarginal marginal = build_marginal(kernel, n);
    const Polynomial v = interaction.full();

    // Per-chunk sums of a = F w, b = w and their second moments, reduced in chunk order.
    struct Sums {
        double a = 0, b = 0, aa = 0, bb = 0, ab = 0;
        std::size_t count = 0, non_finite = 0;
    };
    const std::size_t chunks = (samples + kSampleChunk - 1) / kSampleChunk;
    std::vector<Sums> partial(chunks);
    sample_chunks(marginal, samples, seed, [&](std::size_t chunk, const Eigen::MatrixXd& rows) {
        Sums s;
        std::vector<double> x(n);
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            for (Level i = 0; i < n; ++i) x[i] = rows(r, static_cast<Eigen::Index>(i));
            double product = 1.0;
            for (const auto& f : fs) {
                double phi = 0.0;
                for (std::size_t i = 0; i < std::min<std::size_t>(f.size(), n); ++i) phi += f[i] * x[i];
                product *= phi;
            }
            const double w = std::exp(-v(x));
            const double a = product * w;
            if (!std::isfinite(a) || !std::isfinite(w)) {
                ++s.non_finite;
                continue;
            }
            ++s.count;
            s.a += a;
            s.b += w;
            s.aa += a * a;
            s.bb += w * w;
            s.ab += a * w;
        }
        partial[chunk] = s;
    });
    Sums t;
    for (const auto& s : partial) {
        t.a += s.a;
        t.b += s.b;
        t.aa += s.aa;
        t.bb += s.bb;
        t.ab += s.ab;
        t.count += s.count;
        t.non_finite += s.non_finite;
    }
    if (static_cast<double>(t.non_finite) > kMaxNonFiniteFraction * static_cast<double>(samples))
        throw NonFiniteSamples(std::to_string(t.non_finite) + " non-finite interacting samples");
    if (t.count < 2) throw NonFiniteSamples("too few finite interacting samples");

    const double cnt = static_cast<double>(t.count);
    const double mean_a = t.a / cnt;
    const double mean_b = t.b / cnt;
    const double var_a = std::max(0.0, (t.aa - cnt * mean_a * mean_a) / (cnt - 1.0));
    const double var_b = std::max(0.0, (t.bb - cnt * mean_b * mean_b) / (cnt - 1.0));
    const double cov_ab = (t.ab - cnt * mean_a * mean_b) / (cnt - 1.0);
    const double se_b = std::sqrt(var_b / cnt);

    if (!(mean_b > kMonteCarloSigmas * se_b))
        throw IllConditioned("partition function estimate " + std::to_string(mean_b) + " within 5 stderr of zero");

    const double ratio = mean_a / mean_b;
    const double var_ratio = std::max(0.0, var_a - 2.0 * ratio * cov_ab + ratio * ratio * var_b) / (mean_b * mean_b);
    InteractingEstimate out;
    out.correlation = {ratio, std::sqrt(var_ratio / cnt), t.count, Method::MonteCarlo};
    out.partition = {mean_b, se_b, t.count, Method::MonteCarlo};
    return out;
}

double perturbative_oracle(const std::vector<TestFunction>& fs, const InteractionSpec& interaction,
                           const CovarianceKernel& kernel, Level n) {
    check_family(fs, kernel);
    interaction.validate();
    const double free = schwinger_free(fs, kernel);
    if (interaction.coupling == 0.0) return free;
    const Polynomial product = product_of_fields(fs);
    const Level level = std::max({n, product.support_level(), interaction.potential.support_level()});
    WickEvaluator wick(build_marginal(kernel, level).covariance());
    const double with_v = wick.integrate(product * interaction.potential);
    const double v_mean = wick.integrate(interaction.potential);
    return free - interaction.coupling * (with_v - free * v_mean);
}

double second_order_scale(const std::vector<TestFunction>& fs, const InteractionSpec& interaction,
                          const CovarianceKernel& kernel, Level n) {
    check_family(fs, kernel);
    const double free = schwinger_free(fs, kernel);
    const Polynomial product = product_of_fields(fs);
    const Polynomial& v0 = interaction.potential;
    const Level level = std::max({n, product.support_level(), v0.support_level()});
    WickEvaluator wick(build_marginal(kernel, level).covariance());
    const Polynomial v0_sq = v0 * v0;
    const double f_v = wick.integrate(product * v0);
    const double f_vv = wick.integrate(product * v0_sq);
    const double v = wick.integrate(v0);
    const double vv = wick.integrate(v0_sq);
    return std::abs(0.5 * f_vv - f_v * v + free * (v * v - 0.5 * vv));
}

LatticeSpec lattice_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidArgument("lattice kernel must be an object");
    for (const auto& [key, value] : j.items())
        if (key != "type" && key != "d" && key != "n" && key != "a" && key != "m" && key != "scale")
            throw InvalidArgument("lattice kernel: unknown key '" + key + "'");
    for (const char* key : {"d", "n", "a", "m"})
        if (!j.contains(key)) throw InvalidArgument(std::string("lattice kernel: missing '") + key + "'");
    if (!j.at("d").is_number_integer() || !j.at("n").is_number_integer())
        throw InvalidArgument("lattice kernel: 'd' and 'n' must be integers");
    if (!j.at("a").is_number() || !j.at("m").is_number() || (j.contains("scale") && !j.at("scale").is_number()))
        throw InvalidArgument("lattice kernel: 'a', 'm' and 'scale' must be numbers");
    if (j.at("n").get<long long>() < 1) throw InvalidArgument("lattice kernel: 'n' must be >= 1");
    LatticeSpec spec;
    spec.dimension = j.at("d").get<int>();
    spec.sites_per_dim = j.at("n").get<std::size_t>();
    spec.spacing = j.at("a").get<double>();
    spec.mass = j.at("m").get<double>();
    if (j.contains("scale")) spec.scale = j.at("scale").get<double>();
    spec.validate();
    return spec;
}

InteractionSpec interaction_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidArgument("interaction must be an object");
    for (const auto& [key, value] : j.items())
        if (key != "lambda" && key != "monomial_degree" && key != "sites")
            throw InvalidArgument("interaction: unknown key '" + key + "'");
    if (!j.contains("lambda") || !j.at("lambda").is_number()) throw InvalidArgument("interaction: numeric 'lambda' required");
    std::uint32_t degree = 4;
    if (j.contains("monomial_degree")) {
        if (!j.at("monomial_degree").is_number_integer() || j.at("monomial_degree").get<long long>() < 2)
            throw InvalidArgument("interaction: 'monomial_degree' must be an integer >= 2");
        degree = j.at("monomial_degree").get<std::uint32_t>();
    }
    if (!j.contains("sites") || !j.at("sites").is_array()) throw InvalidArgument("interaction: 'sites' array required");
    std::vector<std::size_t> sites;
    for (const auto& s : j.at("sites")) {
        if (!s.is_number_integer() || s.get<long long>() < 0)
            throw InvalidArgument("interaction: sites must be non-negative integers");
        sites.push_back(s.get<std::size_t>());
    }
    return InteractionSpec::site_power(j.at("lambda").get<double>(), degree, sites);
}

} // namespace projlim
