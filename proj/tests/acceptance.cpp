// Acceptance battery: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "projlim/cli.hpp"
#include "projlim/discrete.hpp"
#include "projlim/integration.hpp"
#include "projlim/qft.hpp"

using namespace projlim;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;

    void fail(const std::string& why) {
        if (passed) detail = why;
        passed = false;
    }
};

struct Case {
    Eigen::MatrixXd covariance;
    Polynomial f;
    Level level;
};

constexpr Level kBatteryHorizon = 8;

// 25 random polynomial cylinder functions (level <= 4, degree <= 6) over random SPD kernels.
std::vector<Case> battery() {
    std::mt19937_64 rng(20240611);
    std::vector<Case> cases;
    for (int i = 0; i < 25; ++i) {
        const int level = 1 + i % 4;
        Case c{oracle::random_spd(static_cast<int>(kBatteryHorizon), rng), oracle::random_polynomial(level, 6, 6, rng),
               static_cast<Level>(level)};
        cases.push_back(std::move(c));
    }
    return cases;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Outcome stabilization(const std::vector<Case>& cases) {
    Outcome out;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        const auto kernel = CovarianceKernel::matrix(c.covariance);
        const CylinderFunction f(c.f);
        const auto table = projective_limit_integral(f, kernel, 1e-12, 3, kBatteryHorizon);
        const double exact = exact_polynomial_integral(f, build_marginal(kernel, c.level)).value;
        for (const auto& row : table.rows)
            if (row.level >= c.level && !close(row.estimate.value, exact, 1e-12))
                out.fail("case " + std::to_string(i) + " row " + std::to_string(row.level) + " = " +
                         fmt(row.estimate.value) + ", exact " + fmt(exact));
        if (!table.converged() || !close(*table.limit, exact, 1e-12))
            out.fail("case " + std::to_string(i) + " verdict differs from the exact integral");
    }
    return out;
}

Outcome isometry(const std::vector<Case>& cases) {
    Outcome out;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        const auto kernel = CovarianceKernel::matrix(c.covariance);
        const double base = lp_norm(CylinderFunction(c.f), build_marginal(kernel, c.level), 2.0);
        for (Level m = c.level; m <= kBatteryHorizon; ++m) {
            const double lifted = lp_norm(pullback(CylinderFunction(c.f), m), build_marginal(kernel, m), 2.0);
            if (!close(lifted, base, 1e-10))
                out.fail("case " + std::to_string(i) + " m=" + std::to_string(m) + ": " + fmt(lifted) + " vs " + fmt(base));
        }
    }
    return out;
}

double max_abs_coeff(const Polynomial& p) {
    double m = 0.0;
    for (const auto& [mono, coeff] : p.terms()) m = std::max(m, std::abs(coeff));
    return m;
}

Outcome conditional_laws() {
    Outcome out;
    std::mt19937_64 rng(7);
    // Gaussian: 50 cases, coefficient comparisons within 1e-9
    for (int i = 0; i < 50; ++i) {
        const int m = 2 + i % 3;
        const Eigen::MatrixXd c = oracle::random_spd(m, rng);
        const Polynomial f = oracle::random_polynomial(m, 5, 5, rng);
        const Polynomial g = oracle::random_polynomial(m, 5, 5, rng);
        WickEvaluator wick(c);
        const double f_norm = std::sqrt(wick.integrate(f.pow(2)));
        for (int n = 1; n < m; ++n) {
            const Polynomial en = gaussian_conditional_expectation(f, n, c);
            const std::string tag = "gaussian case " + std::to_string(i) + " n=" + std::to_string(n);
            if (max_abs_coeff(gaussian_conditional_expectation(en, n, c) - en) > 1e-9) out.fail(tag + ": idempotence");
            const Polynomial lin = gaussian_conditional_expectation(f + g.scaled(-0.6), n, c) - en +
                                   gaussian_conditional_expectation(g, n, c).scaled(0.6);
            if (max_abs_coeff(lin) > 1e-9) out.fail(tag + ": linearity");
            for (int k = n; k < m; ++k)
                if (max_abs_coeff(gaussian_conditional_expectation(gaussian_conditional_expectation(f, k, c), n, c) - en) > 1e-9)
                    out.fail(tag + ": tower through " + std::to_string(k));
            if (std::sqrt(wick.integrate(en.pow(2))) > f_norm + 1e-9) out.fail(tag + ": contraction");
        }
    }
    // Discrete: random systems with at most 2^16 outcomes, exact to 1e-14
    std::uniform_int_distribution<std::size_t> alphabet(2, 4), coordinates(2, 6);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        std::vector<std::size_t> sizes;
        std::vector<std::vector<double>> weights;
        std::size_t outcomes = 1;
        for (std::size_t k = coordinates(rng); k > 0; --k) {
            const std::size_t a = alphabet(rng);
            if (outcomes * a > (std::size_t{1} << 16)) break;
            outcomes *= a;
            std::vector<double> w(a);
            double total = 0.0;
            for (auto& v : w) total += (v = 0.1 + std::abs(unit(rng)));
            for (auto& v : w) v /= total;
            // make the weights sum to one in floating point
            double head = 0.0;
            for (std::size_t j = 0; j + 1 < a; ++j) head += w[j];
            w.back() = 1.0 - head;
            sizes.push_back(a);
            weights.push_back(w);
        }
        const FiniteProductSystem system(sizes, weights);
        const Level level = sizes.size();
        TableFunction f{level, sizes, std::vector<double>(outcomes)}, g = f;
        for (auto& v : f.values) v = unit(rng);
        for (auto& v : g.values) v = unit(rng);
        TableFunction mix = f;
        for (std::size_t o = 0; o < outcomes; ++o) mix.values[o] = f.values[o] + 0.5 * g.values[o];
        const double f_norm = brute_force_lp_norm(f, system, level, 2.0);
        for (Level n = 1; n <= level; ++n) {
            const std::string tag = "discrete case " + std::to_string(i) + " n=" + std::to_string(n);
            const TableFunction en = discrete_conditional_expectation(f, n, system);
            const TableFunction twice = discrete_conditional_expectation(en, n, system);
            const TableFunction gn = discrete_conditional_expectation(g, n, system);
            const TableFunction mn = discrete_conditional_expectation(mix, n, system);
            for (std::size_t o = 0; o < en.values.size(); ++o) {
                if (std::abs(twice.values[o] - en.values[o]) > kExactTolerance) out.fail(tag + ": idempotence");
                if (std::abs(mn.values[o] - en.values[o] - 0.5 * gn.values[o]) > kExactTolerance) out.fail(tag + ": linearity");
            }
            for (Level m = n; m <= level; ++m)
                if (!verify_tower(f, system, n, m)) out.fail(tag + ": tower through " + std::to_string(m));
            if (brute_force_lp_norm(en, system, n, 2.0) > f_norm + kExactTolerance) out.fail(tag + ": contraction");
        }
    }
    return out;
}

Outcome monotone_convergence(const std::vector<Case>& cases) {
    Outcome out;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        const Eigen::MatrixXd cov = c.covariance.topLeftCorner(c.level, c.level);
        const auto marginal = build_marginal(cov);
        double previous = std::numeric_limits<double>::infinity();
        for (Level n = 1; n <= c.level; ++n) {
            const double d = lp_norm(CylinderFunction(gaussian_conditional_expectation(c.f, n, cov) - c.f), marginal, 2.0);
            if (d > previous + 1e-12) out.fail("case " + std::to_string(i) + " increases at n=" + std::to_string(n));
            if (n == c.level && d != 0.0) out.fail("case " + std::to_string(i) + " has distance " + fmt(d) + " at level(f)");
            previous = d;
        }
    }
    return out;
}

Outcome wick_isserlis() {
    Outcome out;
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> var(0, 3);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd c = oracle::random_spd(4, rng);
        for (int k : {1, 2, 3, 4, 5, 6}) {
            std::vector<int> idx(k);
            Monomial mono;
            for (auto& v : idx) {
                v = var(rng);
                mono = mono * Monomial::variable(static_cast<std::uint32_t>(v));
            }
            const double matched = wick_moment(mono, c);
            if (k % 2) {
                if (matched != 0.0) out.fail("odd k=" + std::to_string(k) + " gave " + fmt(matched));
            } else if (!close(matched, oracle::permutation_wick(idx, c), 1e-10)) {
                out.fail("k=" + std::to_string(k) + " matching sum differs from permutation formula");
            }
        }
    }
    // Schwinger functions through the same two routes
    const auto kernel = free_covariance({2, 3, 1.0, 0.6});
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t k : {2u, 3u, 4u, 5u, 6u}) {
        std::vector<TestFunction> fs(k, TestFunction(9));
        for (auto& f : fs)
            for (auto& v : f) v = g(rng);
        const double s = schwinger_free(fs, kernel);
        if (k % 2) {
            if (s != 0.0) out.fail("odd Schwinger function nonzero");
            continue;
        }
        Eigen::MatrixXd gram(k, k);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) gram(a, b) = pairing(fs[a], fs[b], kernel);
        std::vector<int> idx(k);
        for (std::size_t a = 0; a < k; ++a) idx[a] = static_cast<int>(a);
        if (!close(s, oracle::permutation_wick(idx, gram), 1e-10)) out.fail("Schwinger k=" + std::to_string(k));
    }
    // Monte Carlo agreement: 20 seeded cases at 10^6 samples
    std::uniform_int_distribution<int> degree(2, 6);
    for (int i = 0; i < 20; ++i) {
        const int dim = 1 + i % 3;
        const Eigen::MatrixXd c = oracle::random_spd(dim, rng);
        std::uniform_int_distribution<int> pick(0, dim - 1);
        Monomial mono;
        const int d = degree(rng) & ~1;
        for (int j = 0; j < d; ++j) mono = mono * Monomial::variable(static_cast<std::uint32_t>(pick(rng)));
        const double exact = wick_moment(mono, c);
        Polynomial p;
        p.add_term(mono, 1.0);
        const auto est = mc_integral(CylinderFunction(p), build_marginal(c), 1000000, 1000 + i);
        if (std::abs(est.value - exact) > 5 * est.std_error)
            out.fail("MC case " + std::to_string(i) + ": " + fmt(est.value) + " +/- " + fmt(est.std_error) + " vs " + fmt(exact));
    }
    return out;
}

Outcome bochner() {
    Outcome out;
    std::mt19937_64 rng(314);
    std::uniform_int_distribution<int> size(2, 8), dim(1, 6);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::vector<LatticeSpec> lattices{{1, 6, 1.0, 0.5}, {2, 3, 1.0, 1.0}, {1, 8, 0.5, 0.2}};
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
        CovarianceKernel kernel = CovarianceKernel::identity();
        std::size_t n;
        if (i % 2 == 0) {
            n = static_cast<std::size_t>(dim(rng));
            kernel = CovarianceKernel::matrix(oracle::random_spd(static_cast<int>(n), rng));
        } else {
            const auto& l = lattices[static_cast<std::size_t>(i / 2) % lattices.size()];
            kernel = free_covariance(l);
            n = l.sites();
        }
        std::vector<std::vector<double>> xis(static_cast<std::size_t>(size(rng)), std::vector<double>(n));
        for (auto& xi : xis)
            for (auto& v : xi) v = 1.5 * g(rng);
        const auto report = positivity_check(kernel, xis, 1e-10);
        worst = std::min(worst, report.min_eigenvalue);
        if (!report.passed) out.fail("subset " + std::to_string(i) + ": min eigenvalue " + fmt(report.min_eigenvalue));
    }
    if (out.passed) out.detail = "smallest eigenvalue " + fmt(worst);
    return out;
}

Outcome lattice_covariance() {
    Outcome out;
    const auto small = free_covariance({1, 2, 1.0, 1.0});
    const double expected[2][2] = {{0.6, 0.4}, {0.4, 0.6}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (std::abs(small.entry(i + 1, j + 1) - expected[i][j]) > 1e-12) out.fail("2-site entry differs");
    for (const LatticeSpec l : {LatticeSpec{1, 2, 1.0, 1.0}, LatticeSpec{1, 9, 1.0, 0.3}, LatticeSpec{2, 4, 0.5, 1.2},
                                LatticeSpec{2, 6, 1.0, 0.7}, LatticeSpec{1, 32, 2.0, 0.05}}) {
        const auto marginal = build_marginal(free_covariance(l), l.sites());
        const Eigen::VectorXd rows = marginal.inverse().rowwise().sum();
        for (Eigen::Index s = 0; s < rows.size(); ++s)
            if (std::abs(rows(s) - l.mass * l.mass) > 1e-10) {
                out.fail("row sum " + fmt(rows(s)) + " vs m^2 " + fmt(l.mass * l.mass));
                break;
            }
    }
    return out;
}

Outcome interacting_toy() {
    Outcome out;
    Eigen::MatrixXd one(1, 1);
    one << 1.0;
    const auto kernel = CovarianceKernel::matrix(one);
    const std::vector<TestFunction> fs{{1.0}, {1.0}};
    const double lambda = 0.01;
    const double oracle = (1.0 - 15.0 * lambda) / (1.0 - 3.0 * lambda);
    const auto est = schwinger_interacting(fs, InteractionSpec::site_power(lambda, 4, {0}), kernel, 1, 1000000, 2024);
    const double allowed = std::max(5 * est.correlation.std_error, 5e-4);
    const double gap = std::abs(est.correlation.value - oracle);
    std::ostringstream detail;
    detail << "lambda=0.01: estimate " << fmt(est.correlation.value) << " +/- " << fmt(est.correlation.std_error)
           << ", oracle " << fmt(oracle) << ", gap " << fmt(gap) << " > allowed " << fmt(allowed);
    if (gap > allowed) out.fail(detail.str());

    const auto free_est = schwinger_interacting(fs, InteractionSpec::site_power(0.0, 4, {0}), kernel, 1, 1000000, 2025);
    const double free = schwinger_free(fs, kernel);
    if (std::abs(free_est.correlation.value - free) > 4 * free_est.correlation.std_error)
        out.fail("lambda=0 estimate " + fmt(free_est.correlation.value) + " vs free " + fmt(free));
    return out;
}

std::string result_without_timestamp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line, kept;
    while (std::getline(in, line))
        if (line.find("\"timestamp\"") == std::string::npos) kept += line + '\n';
    return kept;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
    Outcome out;
    const auto root = std::filesystem::temp_directory_path() / ("projlim-acceptance-" + std::to_string(::getpid()));
    const std::vector<std::pair<std::string, std::function<cli::RunResult()>>> runs{
        {"converge", [] {
             return cli::cmd_converge(nlohmann::json::parse(R"({"kernel":{"type":"identity"},
                 "integrand":{"exp_neg":{"terms":[{"coeff":1,"exponents":[2]}]},"level":1},
                 "tol":1e-3,"window":3,"horizon":4,"samples":100000,"seed":5})"));
         }},
        {"schwinger", [] {
             return cli::cmd_schwinger(nlohmann::json::parse(R"({"kernel":{"type":"lattice","d":1,"n":4,"a":1,"m":1},
                 "test_functions":[[1,0,0,0],[0,0,1,0]],"interaction":{"lambda":0.02,"sites":[0,1,2,3]},
                 "samples":100000,"seed":17})"));
         }},
        {"check", [] {
             return cli::cmd_check(nlohmann::json::parse(R"({"kernel":{"type":"lattice","d":2,"n":3,"a":1,"m":1},
                 "positivity":{"random_shifts":8,"dimension":9,"seed":4}})"));
         }},
    };
    for (const auto& [name, fn] : runs) {
        for (const char* threads : {"1", "2"}) {
            setenv("PROJLIM_THREADS", threads, 1);
            cli::write_outputs(fn(), (root / (name + threads)).string());
        }
        unsetenv("PROJLIM_THREADS");
        const auto a = root / (name + "1"), b = root / (name + "2");
        if (slurp(a / "table.csv") != slurp(b / "table.csv")) out.fail(name + ": table.csv differs");
        if (result_without_timestamp(a / "result.json") != result_without_timestamp(b / "result.json"))
            out.fail(name + ": result.json differs");
    }
    std::filesystem::remove_all(root);
    return out;
}

} // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<Case> cases = battery();
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"stabilization of projective_limit_integral rows", [&] { return stabilization(cases); }},
        {"pullback isometry up to level 8", [&] { return isometry(cases); }},
        {"conditional-expectation laws (Gaussian 1e-9, discrete 1e-14)", conditional_laws},
        {"monotone convergence of E_n(f) to f", [&] { return monotone_convergence(cases); }},
        {"Wick-Isserlis matchings, odd moments, Monte Carlo", wick_isserlis},
        {"characteristic-function positivity", bochner},
        {"lattice covariance", lattice_covariance},
        {"interacting single-mode toy against first-order oracle", interacting_toy},
        {"byte-identical reruns", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.fail(std::string("threw: ") + e.what());
        }
        failed += !o.passed;
        std::printf("%s criterion %zu: %s%s%s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    o.detail.empty() ? "" : " -- ", o.detail.c_str());
        std::fflush(stdout);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d of %zu criteria failed, %.1f s\n", failed, criteria.size(), seconds);
    return failed ? 1 : 0;
}
