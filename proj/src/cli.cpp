#include "projlim/cli.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "projlim/diagram.hpp"
#include "projlim/discrete.hpp"
#include "projlim/error.hpp"
#include "projlim/integration.hpp"
#include "projlim/qft.hpp"
#include "projlim/random.hpp"

namespace projlim::cli {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw InvalidArgument(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw InvalidArgument(where + ": unknown key '" + key + "'");
    }
}

const json& required(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw InvalidArgument(where + ": missing '" + key + "'");
    return j.at(key);
}

double number_or(const json& j, const std::string& where, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw InvalidArgument(where + ": '" + key + "' must be a number");
    return j.at(key).get<double>();
}

std::uint64_t count_or(const json& j, const std::string& where, const char* key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw InvalidArgument(where + ": '" + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> number_array(const json& j, const std::string& where) {
    if (!j.is_array()) throw InvalidArgument(where + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw InvalidArgument(where + " must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

ProjectiveChain gaussian_chain(const CovarianceKernel& kernel, Level depth) {
    return {depth, [kernel](Level n) -> MarginalLaw { return GaussianLaw{kernel.block(n)}; }};
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

CovarianceKernel kernel_from_json(const json& j) {
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        throw InvalidArgument("kernel: object with a string 'type' required");
    const std::string type = j.at("type").get<std::string>();
    if (type == "identity") {
        only_keys(j, "kernel", {"type"});
        return CovarianceKernel::identity();
    }
    if (type == "matrix") {
        only_keys(j, "kernel", {"type", "matrix"});
        const json& rows = required(j, "kernel", "matrix");
        if (!rows.is_array() || rows.empty()) throw InvalidArgument("kernel: 'matrix' must be a non-empty array of rows");
        const auto n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto row = number_array(rows[static_cast<std::size_t>(i)], "kernel row");
            if (static_cast<Eigen::Index>(row.size()) != n) throw DimensionMismatch("kernel: matrix is not square");
            for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
        }
        return CovarianceKernel::matrix(m);
    }
    if (type == "lattice") return free_covariance(lattice_from_json(j));
    throw InvalidArgument("kernel: unknown type '" + type + "'");
}

// ---------------------------------------------------------------- converge

RunResult cmd_converge(const json& config) {
    const std::string where = "converge config";
    only_keys(config, where,
              {"kernel", "integrand", "tol", "window", "horizon", "samples", "seed", "output_dir", "test_hook"});
    const double tol = number_or(config, where, "tol", 1e-10);
    const auto window = static_cast<std::size_t>(count_or(config, where, "window", 3));
    const Level horizon = count_or(config, where, "horizon", 8);
    const MonteCarloOptions mc{count_or(config, where, "samples", 200000), count_or(config, where, "seed", 0)};

    ConvergenceTable table;
    if (config.contains("test_hook")) {
        // Bypasses the integrator: the rows are taken verbatim from the config.
        const json& hook = config.at("test_hook");
        only_keys(hook, "test_hook", {"synthetic_net"});
        const auto values = number_array(required(hook, "test_hook", "synthetic_net"), "synthetic_net");
        std::vector<ConvergenceRow> rows;
        for (std::size_t i = 0; i < values.size(); ++i) rows.push_back({i + 1, {values[i], 0.0, 0, Method::ExactWick}});
        table = assess_rows(std::move(rows), tol, window);
    } else {
        const CovarianceKernel kernel = kernel_from_json(required(config, where, "kernel"));
        const CylinderFunction f = cylinder_from_json(required(config, where, "integrand"));
        table = projective_limit_integral(f, kernel, tol, window, horizon, mc);
    }

    RunResult run;
    run.result = {{"command", "converge"}, {"table", to_json(table)}};
    run.table_csv = to_csv(table);
    if (table.converged()) {
        run.log.push_back("converged to " + fmt(*table.limit) + " at level " + std::to_string(*table.converged_at));
    } else {
        run.exit_code = kNotConverged;
        run.log.push_back("net did not stabilize within tol " + fmt(tol) + " up to the horizon");
    }
    return run;
}

// ---------------------------------------------------------------- schwinger

RunResult cmd_schwinger(const json& config) {
    const std::string where = "schwinger config";
    only_keys(config, where, {"kernel", "test_functions", "mode", "interaction", "level", "samples", "seed", "output_dir"});
    const CovarianceKernel kernel = kernel_from_json(required(config, where, "kernel"));
    const json& raw = required(config, where, "test_functions");
    if (!raw.is_array()) throw InvalidArgument(where + ": 'test_functions' must be an array");
    std::vector<TestFunction> fs;
    for (const auto& f : raw) fs.push_back(number_array(f, "test function"));

    std::string mode = config.contains("interaction") ? "interacting" : "free";
    if (config.contains("mode")) {
        if (!config.at("mode").is_string()) throw InvalidArgument(where + ": 'mode' must be a string");
        mode = config.at("mode").get<std::string>();
    }

    RunResult run;
    const double free_value = schwinger_free(fs, kernel);
    run.result = {{"command", "schwinger"}, {"mode", mode}, {"k", fs.size()}, {"free", free_value}};
    if (mode == "free") {
        run.table_csv = "quantity,value,stderr\nfree," + fmt(free_value) + ",0\n";
        run.log.push_back("S_" + std::to_string(fs.size()) + " = " + fmt(free_value));
        return run;
    }
    if (mode != "interacting") throw InvalidArgument(where + ": mode must be 'free' or 'interacting'");

    const InteractionSpec interaction = interaction_from_json(required(config, where, "interaction"));
    Level n = 0;
    if (kernel.max_level() != CovarianceKernel::unbounded) n = kernel.max_level();
    else if (!fs.empty()) n = fs.front().size();
    n = count_or(config, where, "level", n);
    if (n == 0) throw InvalidArgument(where + ": 'level' required");
    const std::uint64_t samples = count_or(config, where, "samples", 1000000);
    const std::uint64_t seed = count_or(config, where, "seed", 0);

    InteractingEstimate est;
    try {
        est = schwinger_interacting(fs, interaction, kernel, n, samples, seed);
    } catch (const IllConditioned& e) {
        run.exit_code = kIllConditioned;
        run.result["error"] = e.what();
        run.table_csv = "quantity,value,stderr\n";
        run.log.push_back(e.what());
        return run;
    }
    run.result["level"] = n;
    run.result["lambda"] = interaction.coupling;
    run.result["seed"] = seed;
    run.result["estimate"] = to_json(est.correlation);
    run.result["partition"] = to_json(est.partition);
    std::ostringstream csv;
    csv << "quantity,value,stderr\n"
        << "free," << fmt(free_value) << ",0\n"
        << "interacting," << fmt(est.correlation.value) << ',' << fmt(est.correlation.std_error) << '\n'
        << "partition," << fmt(est.partition.value) << ',' << fmt(est.partition.std_error) << '\n';
    run.log.push_back("S_" + std::to_string(fs.size()) + " = " + fmt(est.correlation.value) + " +/- " +
                      fmt(est.correlation.std_error) + ", Z = " + fmt(est.partition.value));
    if (interaction.coupling <= 0.05) {
        const double oracle = perturbative_oracle(fs, interaction, kernel, n);
        run.result["oracle"] = oracle;
        csv << "oracle," << fmt(oracle) << ",0\n";
        run.log.push_back("first-order oracle = " + fmt(oracle));
    }
    run.table_csv = csv.str();
    return run;
}

// ---------------------------------------------------------------- check

RunResult cmd_check(const json& config) {
    const std::string where = "check config";
    only_keys(config, where, {"kernel", "depth", "positivity", "output_dir"});
    const CovarianceKernel kernel = kernel_from_json(required(config, where, "kernel"));
    const bool bounded = kernel.max_level() != CovarianceKernel::unbounded;
    const Level depth = count_or(config, where, "depth", bounded ? std::min<Level>(kernel.max_level(), 6) : 6);

    std::vector<std::string> failures;
    std::ostringstream csv;
    csv << "check,passed,detail\n";

    json consistency;
    try {
        const ConsistencyReport report = check_chain_consistency(gaussian_chain(kernel, depth), depth);
        consistency = to_json(report);
        for (const auto& f : report.failures)
            failures.push_back(f.check + " at (" + std::to_string(f.triple[0]) + "," + std::to_string(f.triple[1]) + "," +
                               std::to_string(f.triple[2]) + ")");
        csv << "consistency," << (report.passed ? "true" : "false") << ',' << report.checks << " checks\n";
    } catch (const LevelError& e) {
        consistency = {{"passed", false}, {"error", e.what()}, {"level", e.level()}};
        failures.push_back(std::string("marginal: ") + e.what());
        csv << "consistency,false,\"" << e.what() << "\"\n";
    }

    json positivity_cfg = config.value("positivity", json::object());
    only_keys(positivity_cfg, "positivity", {"vectors", "random_shifts", "dimension", "seed", "tol"});
    const double tol = number_or(positivity_cfg, "positivity", "tol", 1e-10);
    std::vector<std::vector<double>> xis;
    if (positivity_cfg.contains("vectors")) {
        const json& raw = positivity_cfg.at("vectors");
        if (!raw.is_array()) throw InvalidArgument("positivity: 'vectors' must be an array");
        for (const auto& v : raw) xis.push_back(number_array(v, "positivity vector"));
    } else {
        const std::size_t count = count_or(positivity_cfg, "positivity", "random_shifts", 8);
        const std::size_t dim = count_or(positivity_cfg, "positivity", "dimension", bounded ? std::min<Level>(kernel.max_level(), 4) : 4);
        Philox4x32 rng(count_or(positivity_cfg, "positivity", "seed", 0), 0);
        for (std::size_t i = 0; i < count; ++i) {
            std::vector<double> xi(dim);
            for (auto& v : xi) v = rng.normal();
            xis.push_back(std::move(xi));
        }
    }
    json positivity;
    try {
        const PositivityReport report = positivity_check(kernel, xis, tol);
        positivity = {{"passed", report.passed}, {"min_eigenvalue", report.min_eigenvalue}, {"vectors", xis.size()}};
        if (!report.passed) failures.push_back("positivity: min eigenvalue " + fmt(report.min_eigenvalue));
        csv << "positivity," << (report.passed ? "true" : "false") << ",min_eigenvalue=" << fmt(report.min_eigenvalue)
            << '\n';
    } catch (const NotPositiveDefinite& e) {
        positivity = {{"passed", false}, {"error", e.what()}, {"vectors", xis.size()}};
        failures.push_back(std::string("positivity: ") + e.what());
        csv << "positivity,false,\"" << e.what() << "\"\n";
    }

    RunResult run;
    run.result = {{"command", "check"},
                  {"passed", failures.empty()},
                  {"consistency", consistency},
                  {"positivity", positivity},
                  {"failures", failures}};
    run.table_csv = csv.str();
    run.exit_code = failures.empty() ? kSuccess : kFailure;
    if (failures.empty()) run.log.push_back("all checks passed");
    for (const auto& f : failures) run.log.push_back("FAILED " + f);
    return run;
}

// ---------------------------------------------------------------- oracle

RunResult cmd_oracle(const json& config) {
    const std::string where = "oracle config";
    only_keys(config, where, {"system", "functions", "tower", "output_dir"});
    const FiniteProductSystem system = system_from_json(required(config, where, "system"));
    const json& raw = required(config, where, "functions");
    if (!raw.is_array() || raw.empty()) throw InvalidArgument(where + ": 'functions' must be a non-empty array");
    const bool tower = config.value("tower", true);

    std::ostringstream csv;
    csv << "function,check,n,m,discrepancy,passed\n";
    json rows = json::array();
    bool all = true;
    auto record = [&](std::size_t index, const char* check, Level n, Level m, double discrepancy) {
        const bool ok = discrepancy <= kExactTolerance;
        all = all && ok;
        rows.push_back({{"function", index}, {"check", check}, {"n", n}, {"m", m}, {"discrepancy", discrepancy},
                        {"passed", ok}});
        csv << index << ',' << check << ',' << n << ',' << m << ',' << fmt(discrepancy) << ',' << (ok ? "true" : "false")
            << '\n';
    };

    for (std::size_t i = 0; i < raw.size(); ++i) {
        const CylinderFunction f = cylinder_from_json(raw[i]);
        const Level level = std::max<Level>(1, f.level());
        if (level > system.coordinates())
            throw DimensionMismatch("function " + std::to_string(i) + " has level " + std::to_string(level) +
                                    " beyond the system's " + std::to_string(system.coordinates()) + " coordinates");
        const double total = brute_force_integral(f, system, level);
        for (Level n = 1; n <= level; ++n) {
            const TableFunction en = discrete_conditional_expectation(f, n, system);
            record(i, "integral", n, level, std::abs(brute_force_integral(en, system, n) - total));
        }
        if (tower)
            for (Level n = 1; n <= level; ++n)
                for (Level m = n; m <= level; ++m) record(i, "tower", n, m, verify_tower(f, system, n, m) ? 0.0 : 1.0);
    }

    RunResult run;
    run.result = {{"command", "oracle"}, {"passed", all}, {"checks", rows}};
    run.table_csv = csv.str();
    run.exit_code = all ? kSuccess : kFailure;
    run.log.push_back(all ? "brute force and conditional expectation agree" : "FAILED: mismatch beyond 1e-14");
    return run;
}

// ---------------------------------------------------------------- front door

void write_outputs(const RunResult& run, const std::string& outdir) {
    std::filesystem::create_directories(outdir);
    json doc = run.result;
    doc["timestamp"] = utc_timestamp();
    std::ofstream(std::filesystem::path(outdir) / "result.json") << doc.dump(2) << '\n';
    std::ofstream(std::filesystem::path(outdir) / "table.csv") << run.table_csv;
}

int run(int argc, char** argv) {
    CLI::App app{"projective-limit integration toolkit"};
    app.require_subcommand(1);
    std::string config_path;
    std::string outdir;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"converge", "stabilizing net of finite-dimensional integrals"},
        {"schwinger", "free or interacting Schwinger function"},
        {"check", "chain consistency and positivity battery"},
        {"oracle", "discrete brute-force oracle battery"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", config_path, "config JSON")->required();
        sub->add_option("-o,--outdir", outdir, "output directory");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kFailure;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        std::ifstream in(config_path);
        if (!in) throw InvalidArgument("cannot open config '" + config_path + "'");
        json config;
        try {
            config = json::parse(in);
        } catch (const json::parse_error& e) {
            throw InvalidArgument(std::string("malformed config: ") + e.what());
        }
        if (outdir.empty()) {
            outdir = ".";
            if (config.is_object() && config.contains("output_dir")) {
                if (!config.at("output_dir").is_string()) throw InvalidArgument("'output_dir' must be a string");
                outdir = config.at("output_dir").get<std::string>();
            }
        }
        RunResult result;
        if (command == "converge") result = cmd_converge(config);
        else if (command == "schwinger") result = cmd_schwinger(config);
        else if (command == "check") result = cmd_check(config);
        else result = cmd_oracle(config);
        write_outputs(result, outdir);
        for (const auto& line : result.log) std::cerr << "projlim " << command << ": " << line << '\n';
        if (command == "schwinger" && result.exit_code == kSuccess) {
            std::cout << "value " << fmt(result.result.contains("estimate") ? result.result["estimate"]["value"].get<double>()
                                                                              : result.result["free"].get<double>())
                      << '\n';
            if (result.result.contains("oracle")) std::cout << "oracle " << fmt(result.result["oracle"].get<double>()) << '\n';
        }
        return result.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "projlim " << command << ": error: " << e.what() << '\n';
        return kFailure;
    }
}

} // namespace projlim::cli
