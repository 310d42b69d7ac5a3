// Batch front end: pucci <subcommand> [--config file] [--set key=value]...
// Exit codes: 0 ok, 2 invalid input, 3 numerical failure.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pucci/experiment.hpp"

namespace {

pucci::ExperimentConfig load(const std::string& path, const std::vector<std::string>& sets) {
    pucci::KeyValues kv;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw pucci::ValidationError("cannot read config " + path);
        kv = pucci::parse_key_values(in);
    }
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw pucci::ValidationError("--set expects key=value, got '" + s + "'");
        kv[pucci::trim(s.substr(0, eq))] = pucci::trim(s.substr(eq + 1));
    }
    return pucci::experiment_from_key_values(kv);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Singular Pucci problem laboratory"};
    app.require_subcommand(1);
    std::string config;
    std::vector<std::string> sets;
    int jobs = 1;
    app.add_option("--config", config, "key=value configuration file");
    app.add_option("--set", sets, "override a configuration key (key=value)")->take_all();

    auto* solve = app.add_subcommand("solve", "solve the singular problem, write solution.csv and solve_report.json");
    auto* certify = app.add_subcommand("certify", "search and certify barrier constants for one inequality");
    auto* eigen = app.add_subcommand("eigen", "principal eigenpair of F2+ on the annulus");
    auto* rates = app.add_subcommand("rates", "fit the boundary rate of a solved problem");
    auto* harnack = app.add_subcommand("harnack", "weak-Harnack ratios and oscillation decay of a solved problem");
    auto* sweep = app.add_subcommand("sweep", "solve and classify every (mu, alpha) of the matrix");
    auto* report = app.add_subcommand("report", "print the effective configuration");
    sweep->add_option("--jobs", jobs, "concurrent solves")->check(CLI::PositiveNumber);
    for (auto* sc : {solve, certify, eigen, rates, harnack, sweep, report}) {
        sc->add_option("--config", config, "key=value configuration file");
        sc->add_option("--set", sets, "override a configuration key (key=value)")->take_all();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto cfg = load(config, sets);
        if (*report) {
            std::cout << pucci::run_report(cfg);
            return 0;
        }
        nlohmann::ordered_json out;
        if (*solve) out = pucci::run_solve(cfg);
        else if (*certify) out = pucci::run_certify(cfg);
        else if (*eigen) out = pucci::run_eigen(cfg);
        else if (*rates) out = pucci::run_rates(cfg);
        else if (*harnack) out = pucci::run_harnack(cfg);
        else if (*sweep) out = pucci::run_sweep(cfg, jobs);
        std::cout << out.dump(2) << "\n";
        return 0;
    } catch (const pucci::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const pucci::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
