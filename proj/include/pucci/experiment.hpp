#pragma once

// Flat key=value experiment configuration and the artifact-producing runs
// behind the command-line front end. Every run writes into output_dir and
// returns the JSON document it wrote.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pucci/barriers.hpp"
#include "pucci/diagnostics.hpp"
#include "pucci/eigenpair.hpp"
#include "pucci/singular.hpp"

namespace pucci {

struct ExperimentConfig {
    ProblemSpec problem;
    SolveConfig solve;
    // diagnostics
    double window_min = 1e-4;  ///< fit window, as fractions of R - rho
    double window_max = 1e-2;
    double harnack_top = 1.0;
    int harnack_scales = 6;
    double osc_top = 0.25;
    int osc_scales = 8;
    double nu = 0.5;
    double p = 1.0;
    int transform = 0;  ///< apply the down-map before the Harnack ratio
    // eigen
    int eigen_nodes = 2049;
    double weight_mu = -1.0;  ///< negative: plain eigenproblem
    // certify
    std::string inequality = "I1";
    // sweep
    std::string matrix = "1:1,0:1,0:3,2:1,0:2";
    std::string output_dir = "out";
};

namespace detail {

inline const std::set<std::string>& experiment_keys() {
    static const std::set<std::string> keys = {
        "lambda", "Lambda", "dim", "B", "b", "d", "c0", "mu", "alpha", "M", "C1", "C2", "rho", "R", "L",
        "delta0", "delta_steps", "inner_tol", "max_inner", "policy_tol", "continuation_tol", "nodes", "first_cell",
        "window_min", "window_max", "harnack_top", "harnack_scales", "osc_top", "osc_scales", "nu", "p",
        "transform", "eigen_nodes", "weight_mu", "inequality", "matrix", "output_dir"};
    return keys;
}

inline void read_size(const KeyValues& kv, const std::string& key, std::size_t& target) {
    int v = static_cast<int>(target);
    read_into(kv, key, v);
    require(v > 0, "key '" + key + "' must be positive");
    target = static_cast<std::size_t>(v);
}

} // namespace detail

inline ExperimentConfig experiment_from_key_values(const KeyValues& kv) {
    for (const auto& [k, v] : kv)
        if (!detail::experiment_keys().count(k)) throw ValidationError("unknown config key: " + k);
    ExperimentConfig c;
    c.problem = problem_from_key_values(kv, c.problem);
    read_into(kv, "delta0", c.solve.delta0);
    read_into(kv, "delta_steps", c.solve.delta_steps);
    read_into(kv, "inner_tol", c.solve.inner_tol);
    read_into(kv, "max_inner", c.solve.max_inner);
    read_into(kv, "policy_tol", c.solve.policy_tol);
    read_into(kv, "continuation_tol", c.solve.continuation_tol);
    detail::read_size(kv, "nodes", c.solve.nodes);
    read_into(kv, "first_cell", c.solve.first_cell);
    read_into(kv, "window_min", c.window_min);
    read_into(kv, "window_max", c.window_max);
    read_into(kv, "harnack_top", c.harnack_top);
    read_into(kv, "harnack_scales", c.harnack_scales);
    read_into(kv, "osc_top", c.osc_top);
    read_into(kv, "osc_scales", c.osc_scales);
    read_into(kv, "nu", c.nu);
    read_into(kv, "p", c.p);
    read_into(kv, "transform", c.transform);
    read_into(kv, "eigen_nodes", c.eigen_nodes);
    read_into(kv, "weight_mu", c.weight_mu);
    if (auto it = kv.find("inequality"); it != kv.end()) c.inequality = it->second;
    if (auto it = kv.find("matrix"); it != kv.end()) c.matrix = it->second;
    if (auto it = kv.find("output_dir"); it != kv.end()) c.output_dir = it->second;
    validate(c.problem);
    validate(c.solve);
    detail::require(c.window_min > 0 && c.window_max > c.window_min, "window must satisfy 0 < window_min < window_max");
    detail::require(c.harnack_scales >= 1 && c.osc_scales >= 3, "need >= 1 Harnack and >= 3 oscillation scales");
    detail::require(c.transform == 0 || c.transform == 1, "transform must be 0 or 1");
    detail::require(c.eigen_nodes >= 5, "eigen_nodes must be at least 5");
    inequality_from_string(c.inequality);
    return c;
}

inline KeyValues experiment_to_key_values(const ExperimentConfig& c) {
    auto kv = problem_to_key_values(c.problem);
    kv["delta0"] = format_double(c.solve.delta0);
    kv["delta_steps"] = std::to_string(c.solve.delta_steps);
    kv["inner_tol"] = format_double(c.solve.inner_tol);
    kv["max_inner"] = std::to_string(c.solve.max_inner);
    kv["policy_tol"] = format_double(c.solve.policy_tol);
    kv["continuation_tol"] = format_double(c.solve.continuation_tol);
    kv["nodes"] = std::to_string(c.solve.nodes);
    kv["first_cell"] = format_double(c.solve.first_cell);
    kv["window_min"] = format_double(c.window_min);
    kv["window_max"] = format_double(c.window_max);
    kv["harnack_top"] = format_double(c.harnack_top);
    kv["harnack_scales"] = std::to_string(c.harnack_scales);
    kv["osc_top"] = format_double(c.osc_top);
    kv["osc_scales"] = std::to_string(c.osc_scales);
    kv["nu"] = format_double(c.nu);
    kv["p"] = format_double(c.p);
    kv["transform"] = std::to_string(c.transform);
    kv["eigen_nodes"] = std::to_string(c.eigen_nodes);
    kv["weight_mu"] = format_double(c.weight_mu);
    kv["inequality"] = c.inequality;
    kv["matrix"] = c.matrix;
    kv["output_dir"] = c.output_dir;
    return kv;
}

/// "mu:alpha,mu:alpha,..."
inline std::vector<std::pair<double, double>> parse_matrix(const std::string& text) {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        detail::require(colon != std::string::npos, "matrix entry '" + item + "': expected mu:alpha");
        out.emplace_back(parse_double("matrix", trim(item.substr(0, colon))),
                         parse_double("matrix", trim(item.substr(colon + 1))));
    }
    detail::require(!out.empty(), "matrix must list at least one mu:alpha pair");
    return out;
}

namespace detail {

inline std::filesystem::path ensure_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot write " + path.string());
    os << j.dump(2) << "\n";
}

inline FitWindow scaled_window(const ExperimentConfig& c) {
    const double w = c.problem.geometry.R - c.problem.geometry.rho;
    return {c.window_min * w, c.window_max * w};
}

inline GridFunction load_solution(const ExperimentConfig& c) {
    const auto path = std::filesystem::path(c.output_dir) / "solution.csv";
    if (!std::filesystem::exists(path)) throw ValidationError("no solution at " + path.string() + ": run solve first");
    return read_csv(path.string());
}

} // namespace detail

inline nlohmann::ordered_json run_solve(const ExperimentConfig& c) {
    const auto dir = detail::ensure_dir(c.output_dir);
    const auto rep = solve_singular(c.problem, c.solve);
    const auto csv = dir / "solution.csv";
    write_csv(rep.solution, csv.string());
    nlohmann::ordered_json j;
    j["solution_csv_path"] = csv.string();
    j["residual_max"] = rep.residual_max;
    j["iterations"] = rep.iterations_per_delta;
    j["hopf_radius"] = rep.hopf_radius;
    j["hopf_ok"] = rep.hopf_ok;
    j["bracket_violations"] = rep.bracket_violations;
    j["deltas"] = rep.deltas;
    j["limit_change"] = rep.limit_change;
    j["monotonicity_violations"] = rep.monotonicity_violations;
    detail::write_json(dir / "solve_report.json", j);
    return j;
}

struct RateRow {
    double mu = 0.0, alpha = 0.0;
    RegimePrediction predicted;
    RateReport fitted;
};

inline std::string rates_csv_header() { return "mu,alpha,regime,expected,fitted,residual"; }

inline std::string rates_csv_line(const RateRow& r) {
    return format_double(r.mu) + "," + format_double(r.alpha) + "," + to_string(r.fitted.regime) + "," +
           format_double(r.predicted.expected_exponent) + "," + format_double(r.fitted.fitted_exponent) + "," +
           format_double(r.fitted.fit_residual);
}

inline nlohmann::ordered_json rate_json(const RateRow& r) {
    nlohmann::ordered_json j;
    j["mu"] = r.mu;
    j["alpha"] = r.alpha;
    j["predicted_regime"] = to_string(r.predicted.regime);
    j["expected_exponent"] = r.predicted.expected_exponent;
    j["regime"] = to_string(r.fitted.regime);
    j["fitted_exponent"] = r.fitted.fitted_exponent;
    j["fitted_D"] = r.fitted.fitted_D ? nlohmann::ordered_json(*r.fitted.fitted_D) : nlohmann::ordered_json();
    j["prefactor"] = r.fitted.prefactor;
    j["fit_residual"] = r.fitted.fit_residual;
    j["window"] = {r.fitted.window.d_min, r.fitted.window.d_max};
    j["nodes"] = r.fitted.nodes;
    return j;
}

inline RateRow rate_row(const GridFunction& u, const ExperimentConfig& c) {
    RateRow row;
    row.mu = c.problem.forcing.mu;
    row.alpha = c.problem.forcing.alpha;
    row.predicted = regime_predict(row.mu, row.alpha);
    row.fitted = classify_rate(u, row.alpha, detail::scaled_window(c));
    return row;
}

inline nlohmann::ordered_json run_rates(const ExperimentConfig& c) {
    const auto u = detail::load_solution(c);
    const auto dir = detail::ensure_dir(c.output_dir);
    const auto row = rate_row(u, c);
    std::ofstream os(dir / "rates_summary.csv");
    os << rates_csv_header() << "\n" << rates_csv_line(row) << "\n";
    auto j = rate_json(row);
    detail::write_json(dir / "rates.json", j);
    return j;
}

inline nlohmann::ordered_json run_harnack(const ExperimentConfig& c) {
    const auto u = detail::load_solution(c);
    const auto dir = detail::ensure_dir(c.output_dir);
    HarnackOptions ho;
    ho.p = c.p;
    const auto h = harnack_ratio(u, c.problem, dyadic_scales(c.harnack_top, c.harnack_scales), c.transform == 1, ho);
    const auto o = oscillation_decay(u, c.nu, dyadic_scales(c.osc_top, c.osc_scales));
    {
        std::ofstream os(dir / "harnack.csv");
        os << "scale,ratio\n";
        for (std::size_t k = 0; k < h.scales.size(); ++k)
            os << format_double(h.scales[k]) << "," << format_double(h.ratios[k]) << "\n";
    }
    {
        std::ofstream os(dir / "oscillation.csv");
        os << "scale,osc\n";
        for (std::size_t k = 0; k < o.scales.size(); ++k)
            os << format_double(o.scales[k]) << "," << format_double(o.osc_values[k]) << "\n";
    }
    nlohmann::ordered_json j;
    j["p_exponent"] = h.p_exponent;
    j["transformed"] = h.transformed;
    j["scales"] = h.scales;
    j["ratios"] = h.ratios;
    j["oscillation"] = {{"scales", o.scales},
                        {"osc_values", o.osc_values},
                        {"fitted_tau", o.fitted_tau ? nlohmann::ordered_json(*o.fitted_tau) : nlohmann::ordered_json()},
                        {"fit_residual", o.fit_residual},
                        {"recursion_gamma", o.recursion_gamma},
                        {"nu", o.nu},
                        {"note", o.note}};
    detail::write_json(dir / "harnack.json", j);
    return j;
}

inline nlohmann::ordered_json run_eigen(const ExperimentConfig& c) {
    const auto dir = detail::ensure_dir(c.output_dir);
    EigenOptions eo;
    eo.nodes = static_cast<std::size_t>(c.eigen_nodes);
    const std::optional<double> wmu = c.weight_mu >= 0 ? std::optional<double>(c.weight_mu) : std::nullopt;
    const auto pair = principal_eig(c.problem.ellipticity, c.problem.growth.b, c.problem.geometry, wmu, eo);
    const auto csv = dir / "eigenfunction.csv";
    write_csv(pair.eigenfunction, csv.string());
    nlohmann::ordered_json j;
    j["eigenvalue"] = pair.eigenvalue;
    j["residual"] = eig_residual(pair, c.problem.ellipticity, c.problem.growth.b, c.problem.geometry);
    j["csv_path"] = csv.string();
    j["weighted"] = pair.weighted;
    if (pair.weighted) {
        j["weight_mu"] = pair.weight_mu;
        j["weight"] = "(r - rho)^mu";
    }
    j["policy_sweeps"] = pair.policy_sweeps;
    detail::write_json(dir / "eigen.json", j);
    return j;
}

inline nlohmann::ordered_json run_certify(const ExperimentConfig& c) {
    const auto dir = detail::ensure_dir(c.output_dir);
    const auto id = inequality_from_string(c.inequality);
    SearchBounds sb;
    sb.delta = c.solve.delta0;
    const auto res = search_constants(family_for(id), id, c.problem, sb);
    nlohmann::ordered_json consts;
    for (const auto& [k, v] : res.barrier.constants) consts[k] = v;
    nlohmann::ordered_json j;
    j["inequality"] = to_string(id);
    j["family"] = to_string(res.barrier.family);
    j["constants"] = consts;
    j["min_margin"] = res.report.min_margin;
    j["worst_node"] = id == InequalityId::I7_krylov_slab
                          ? nlohmann::ordered_json{res.report.worst_point, res.report.worst_point_n}
                          : nlohmann::ordered_json(res.report.worst_point);
    j["evaluated_nodes"] = res.report.evaluated_nodes;
    j["recheck_min_margin"] = res.recheck.min_margin;
    j["recheck_nodes"] = res.recheck.evaluated_nodes;
    j["steps"] = res.steps;
    if (id == InequalityId::I7_krylov_slab) j["a2_source"] = "C2 (upper forcing constant)";
    detail::write_json(dir / "certify.json", j);
    return j;
}

/// Solves and classifies every (mu, alpha) of the matrix, up to `jobs` at a
/// time. Each job writes under output_dir/sweep/<index>; the summary is
/// assembled in matrix order, so the output does not depend on scheduling.
inline nlohmann::ordered_json run_sweep(const ExperimentConfig& c, int jobs) {
    detail::require(jobs >= 1, "jobs must be at least 1");
    const auto dir = detail::ensure_dir(c.output_dir);
    const auto matrix = parse_matrix(c.matrix);
    std::vector<RateRow> rows(matrix.size());
    std::vector<std::exception_ptr> errors(matrix.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t k = next++; k < matrix.size(); k = next++) {
            try {
                ExperimentConfig job = c;
                job.problem.forcing.mu = matrix[k].first;
                job.problem.forcing.alpha = matrix[k].second;
                const auto jd = detail::ensure_dir((dir / "sweep" / std::to_string(k)).string());
                const auto rep = solve_singular(job.problem, job.solve);
                write_csv(rep.solution, (jd / "solution.csv").string());
                rows[k] = rate_row(rep.solution, job);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const auto nthreads = std::min<std::size_t>(static_cast<std::size_t>(jobs), matrix.size());
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::ofstream os(dir / "rates_summary.csv");
    os << rates_csv_header() << "\n";
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        os << rates_csv_line(r) << "\n";
        j.push_back(rate_json(r));
    }
    detail::write_json(dir / "sweep.json", j);
    return j;
}

inline std::string run_report(const ExperimentConfig& c) {
    const auto text = to_config_text(experiment_to_key_values(c));
    const auto dir = detail::ensure_dir(c.output_dir);
    std::ofstream os(dir / "effective.cfg");
    os << text;
    return text;
}

} // namespace pucci
