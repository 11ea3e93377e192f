#pragma once

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "extra/harness.hpp"

namespace extra::cli {

/// Command-line front end. Subcommands:
///   gen-graph     write a random connected graph as an edge list
///   check-matrix  build mixing matrices for a graph and print the
///                 assumption report (exit 2 when a part fails)
///   run           execute a scenario config file
///   reproduce     execute a named built-in scenario
inline int cli_main(std::vector<std::string> args) {
    CLI::App app{"decentralized consensus optimization toolkit"};
    app.require_subcommand(1);

    // gen-graph
    auto* gen = app.add_subcommand("gen-graph", "generate a random connected graph");
    size_t gg_n = 10;
    double gg_r = 0.5;
    std::uint64_t gg_seed = 1;
    std::string gg_out;
    gen->add_option("--n", gg_n, "agent count")->required();
    gen->add_option("--r", gg_r, "connectivity ratio in (0,1]")->required();
    gen->add_option("--seed", gg_seed, "generator seed");
    gen->add_option("--out", gg_out, "output path (default: stdout)");

    // check-matrix
    auto* check = app.add_subcommand("check-matrix", "validate mixing matrices for a graph");
    size_t cm_n = 10;
    double cm_r = 0.5;
    std::uint64_t cm_seed = 1;
    std::string cm_graph, cm_strategy = "metropolis", cm_wtilde = "default";
    double cm_eps = 1.0, cm_tol = 1e-9;
    double cm_tau = 0.0;
    std::string cm_export_w, cm_export_wt;
    check->add_option("--graph", cm_graph, "edge-list file (otherwise generate)");
    check->add_option("--n", cm_n, "agent count when generating");
    check->add_option("--r", cm_r, "connectivity ratio when generating");
    check->add_option("--seed", cm_seed, "generator seed when generating");
    check->add_option("--strategy", cm_strategy, "metropolis | laplacian");
    check->add_option("--eps", cm_eps, "metropolis epsilon");
    check->add_option("--tau", cm_tau, "laplacian scaling (0 = max degree + 1)");
    check->add_option("--wtilde", cm_wtilde, "default | overshoot");
    check->add_option("--tol", cm_tol, "validation tolerance");
    check->add_option("--export-w", cm_export_w, "write W as CSV");
    check->add_option("--export-wt", cm_export_wt, "write Wt as CSV");

    // run
    auto* run = app.add_subcommand("run", "execute a scenario config");
    std::string run_config, run_out = ".";
    std::int64_t run_seed = -1;
    bool run_override = false, run_dump = false;
    run->add_option("--config", run_config, "scenario config path")->required();
    run->add_option("--out", run_out, "output directory");
    run->add_option("--seed", run_seed, "override graph seed (data seed becomes seed+1)");
    run->add_flag("--override-assumptions", run_override, "run even if the matrix check fails");
    run->add_flag("--dump-data", run_dump, "also write one data CSV per agent");

    // reproduce
    auto* rep = app.add_subcommand("reproduce", "execute a named built-in scenario");
    std::string rep_name, rep_out = ".";
    std::int64_t rep_seed = -1;
    bool rep_override = false, rep_dump = false;
    rep->add_option("name", rep_name, "ls | huber | logistic | ls-desk | huber-desk | logistic-desk")
        ->required();
    rep->add_option("--out", rep_out, "output directory");
    rep->add_option("--seed", rep_seed, "override graph seed (data seed becomes seed+1)");
    rep->add_flag("--override-assumptions", rep_override, "run even if the matrix check fails");
    rep->add_flag("--dump-data", rep_dump, "also write one data CSV per agent");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) {
            const graph::Graph g = graph::random_connected(gg_n, gg_r, gg_seed);
            if (gg_out.empty()) {
                graph::write_edge_list(std::cout, g);
            } else {
                std::ofstream out(gg_out, std::ios::binary);
                if (!out) throw Error("cannot open output file: " + gg_out);
                graph::write_edge_list(out, g);
            }
            return 0;
        }

        if (check->parsed()) {
            graph::Graph g = [&]() {
                if (cm_graph.empty()) return graph::random_connected(cm_n, cm_r, cm_seed);
                std::ifstream in(cm_graph);
                if (!in) throw Error("cannot open graph file: " + cm_graph);
                return graph::read_edge_list(in);
            }();
            linalg::SymMatrix w =
                cm_strategy == "metropolis"
                    ? mixing::metropolis(g, cm_eps)
                    : mixing::laplacian_weights(g, cm_tau > 0.0 ? cm_tau : mixing::default_tau(g));
            linalg::SymMatrix wt =
                cm_wtilde == "overshoot" ? mixing::wtilde_overshoot(w) : mixing::wtilde_default(w);
            const mixing::ValidationReport report = mixing::verify_assumption1(w, wt, g, cm_tol);
            std::cout << report.to_string();
            std::cout << "spectral gap sigma_max(W - 11^T/n) = " << mixing::dgd_spectral_gap(w)
                      << '\n';
            if (!cm_export_w.empty()) {
                std::ofstream out(cm_export_w, std::ios::binary);
                harness::write_matrix_csv(out, w);
            }
            if (!cm_export_wt.empty()) {
                std::ofstream out(cm_export_wt, std::ios::binary);
                harness::write_matrix_csv(out, wt);
            }
            return report.all_passed() ? 0 : 2;
        }

        harness::Scenario scenario = run->parsed() ? harness::load_scenario(run_config)
                                                   : harness::builtin_scenario(rep_name);
        const std::int64_t seed_override = run->parsed() ? run_seed : rep_seed;
        const bool override_flag = run->parsed() ? run_override : rep_override;
        const std::string out_dir = run->parsed() ? run_out : rep_out;
        if (seed_override >= 0) {
            scenario.graph_seed = static_cast<std::uint64_t>(seed_override);
            scenario.data_seed = static_cast<std::uint64_t>(seed_override) + 1;
        }
        if (override_flag) scenario.override_assumptions = true;

        if (run->parsed() ? run_dump : rep_dump) harness::dump_scenario_data(scenario, out_dir);
        const harness::RunArtifact artifact = harness::execute(scenario, out_dir);
        for (const auto& s : artifact.solvers) {
            std::cout << s.label << ": final residual " << s.final_relative_residual << " after "
                      << s.iterations << " iterations";
            if (s.diverged) std::cout << " (diverged at " << s.diverged_at << ")";
            std::cout << '\n';
        }
        std::cout << "artifacts written to " << out_dir << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace extra::cli
