// signalroot: likelihood-root inference for multi-channel Poisson
// signal-plus-background counting data.
//
//   analyze   p-values, median-unbiased estimates and confidence bounds
//   table     significance-function values on a psi grid (TSV, for plotting)
//   coverage  Monte Carlo coverage study with a seeded, thread-safe RNG

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "signalroot/io.hpp"
#include "signalroot/significance.hpp"

namespace {

using namespace signalroot;

std::vector<Method> parse_methods(const std::string& spec) {
    if (spec == "all") return {Method::r, Method::rstar, Method::rstar_bayes};
    std::vector<Method> out;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto m = method_from_name(token);
        if (!m) throw CLI::ValidationError("--method", "unknown method '" + token + "'");
        out.push_back(*m);
    }
    if (out.empty()) throw CLI::ValidationError("--method", "no methods given");
    return out;
}

std::vector<double> parse_grid(const std::string& spec, const PivotEngine& engine, int auto_points) {
    if (spec == "auto") return auto_grid(engine, auto_points);
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 == std::string::npos ? spec.size() : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw CLI::ValidationError("--grid", "expected min:max:steps or auto");
    const double lo = std::stod(spec.substr(0, c1));
    const double hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    const int steps = std::stoi(spec.substr(c2 + 1));
    if (steps < 1 || !(hi > lo))
        throw CLI::ValidationError("--grid", "need max > min and steps >= 1");
    std::vector<double> grid(steps + 1);
    for (int i = 0; i <= steps; ++i) grid[i] = lo + (hi - lo) * i / steps;
    return grid;
}

void write_or_print(const std::string& out_path, const std::string& payload) {
    if (out_path.empty()) return;
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write output file: " + out_path);
    out << payload;
}

int default_threads() {
    if (const char* env = std::getenv("SIGNALROOT_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Significance functions and coverage studies for the multi-channel "
                 "Poisson signal-plus-background model"};
    app.require_subcommand(1);

    // --- analyze ---
    std::string an_data, an_format = "auto", an_method = "all", an_out;
    std::vector<double> an_alpha = {0.01};
    std::vector<double> an_psi0 = {0.0};
    auto* an = app.add_subcommand("analyze", "Full inference report for one dataset");
    an->add_option("--data", an_data, "Input file (CSV or JSON)")->required();
    an->add_option("--format", an_format, "Input format: csv, json or auto")
        ->check(CLI::IsMember({"csv", "json", "auto"}));
    an->add_option("--method", an_method, "Methods: all or comma list of r,rstar,bayes");
    an->add_option("--alpha", an_alpha, "Bound levels alpha in (0, 0.5)")->delimiter(',');
    an->add_option("--psi0", an_psi0, "Null values for one-sided p-values")->delimiter(',');
    an->add_option("--out", an_out, "Write the JSON report here");

    // --- table ---
    std::string tb_data, tb_format = "auto", tb_method = "all", tb_grid = "auto", tb_out;
    int tb_points = 101;
    auto* tb = app.add_subcommand("table", "Significance-function table on a psi grid");
    tb->add_option("--data", tb_data, "Input file (CSV or JSON)")->required();
    tb->add_option("--format", tb_format, "Input format: csv, json or auto")
        ->check(CLI::IsMember({"csv", "json", "auto"}));
    tb->add_option("--method", tb_method, "Columns: all or comma list of r,rstar,bayes");
    tb->add_option("--grid", tb_grid, "Grid min:max:steps, or auto");
    tb->add_option("--points", tb_points, "Point count for the auto grid")
        ->check(CLI::PositiveNumber);
    tb->add_option("--out", tb_out, "Write the TSV here (default stdout)");

    // --- coverage ---
    CoverageConfig cfg;
    std::string cv_methods = "all", cv_out;
    cfg.levels = {0.01, 0.025, 0.05, 0.10, 0.50, 0.90, 0.95, 0.975, 0.99};
    cfg.threads = default_threads();
    auto* cv = app.add_subcommand("coverage", "Monte Carlo coverage of upper bounds");
    cv->add_option("--psi", cfg.psi_true, "True signal value")->required();
    cv->add_option("--beta", cfg.beta, "True background rates")->required()->delimiter(',');
    cv->add_option("--gamma", cfg.gamma, "True acceptance intensities")->required()->delimiter(',');
    cv->add_option("--t", cfg.t, "Background exposure constants")->required()->delimiter(',');
    cv->add_option("--u", cfg.u, "Acceptance exposure constants")->required()->delimiter(',');
    cv->add_option("--reps", cfg.replications, "Replications")->required();
    cv->add_option("--levels", cfg.levels, "Nominal upper-bound levels")->delimiter(',');
    cv->add_option("--methods", cv_methods, "all or comma list of r,rstar,bayes");
    cv->add_option("--seed", cfg.seed, "RNG seed (required; no wall-clock default)")->required();
    cv->add_option("--threads", cfg.threads, "Worker threads (default $SIGNALROOT_THREADS or 1)");
    cv->add_option("--out", cv_out, "Write the JSON results here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (an->parsed()) {
            const Dataset data = load_dataset(an_data, an_format);
            const auto methods = parse_methods(an_method);
            const InferenceReport report = analyze(data, methods, an_alpha, an_psi0);
            std::cout << report_to_text(report);
            write_or_print(an_out, report_to_json(report).dump(2) + "\n");
            return report.any_fallback() ? 2 : 0;
        }

        if (tb->parsed()) {
            const Dataset data = load_dataset(tb_data, tb_format);
            const auto methods = parse_methods(tb_method);
            PivotEngine engine(data);
            const auto grid = parse_grid(tb_grid, engine, tb_points);
            const auto rows = significance_table(engine, grid);

            std::ostringstream tsv;
            if (tb_method == "all") {
                write_table_tsv(tsv, rows);
            } else {
                tsv << "psi";
                for (Method m : methods) tsv << "\tphi_" << method_name(m);
                tsv << "\n";
                for (const auto& row : rows) {
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), "%.10g", row.psi);
                    tsv << buf;
                    for (Method m : methods) {
                        const double v = m == Method::r ? row.phi_r
                                       : m == Method::rstar ? row.phi_rstar
                                                            : row.phi_rstar_bayes;
                        std::snprintf(buf, sizeof(buf), "\t%.10g", v);
                        tsv << buf;
                    }
                    tsv << "\n";
                }
            }
            if (tb_out.empty()) std::cout << tsv.str();
            else write_or_print(tb_out, tsv.str());

            bool any_fallback = false;
            for (const auto& row : rows)
                any_fallback = any_fallback || row.fallback_rstar || row.fallback_bayes;
            return any_fallback ? 2 : 0;
        }

        if (cv->parsed()) {
            cfg.methods = parse_methods(cv_methods);
            const CoverageResult result = coverage_study(cfg);
            std::cout << coverage_to_text(result);
            write_or_print(cv_out, coverage_to_json(result).dump(2) + "\n");
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
