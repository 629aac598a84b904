// remest command-line front end.
//
// Subcommands:
//   solve       design a threshold policy for a known mixture model
//   fit         fit a kernel density estimate from a sample CSV
//   design      fit + solve in one step (data-driven design)
//   simulate    finite-n Monte Carlo run of a policy over a collision channel
//   experiment  (M, delta) sample-complexity sweep from a JSON spec
//
// Exit codes: 0 success, 1 input/usage error, 2 solver did not converge.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "remest/experiments.hpp"
#include "remest/io.hpp"
#include "remest/kde.hpp"
#include "remest/simulator.hpp"
#include "remest/solver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNotConverged = 2;

struct SolveArgs {
    std::string model_file;
    double kappa = 0.5;
    double delta = 0.0;
    std::string out = "policy.json";
    std::string trace_file;
    std::vector<double> theta0;
    double theta_tol = 1e-9;
    double lambda_tol = 1e-9;
};

remest::SolverConfig make_config(double kappa, double delta, double theta_tol,
                                 double lambda_tol) {
    remest::SolverConfig config;
    config.kappa_bar = kappa;
    config.delta = delta;
    config.theta_tol = theta_tol;
    config.lambda_tol = lambda_tol;
    return config;
}

int solve_model(const remest::GaussianMixture& model, const SolveArgs& args) {
    remest::SolverConfig config =
        make_config(args.kappa, args.delta, args.theta_tol, args.lambda_tol);
    config.validate();
    std::optional<std::vector<double>> init;
    if (!args.theta0.empty()) {
        if (static_cast<int>(args.theta0.size()) != model.dim()) {
            throw std::runtime_error("--theta0 dimension does not match the model");
        }
        init = args.theta0;
    }
    auto [policy, trace] = remest::alternating_solve(model, config, std::move(init));

    remest::io::save_policy(args.out, policy, args.kappa, args.delta);
    if (!args.trace_file.empty()) {
        remest::io::save_trace_csv(args.trace_file, trace, model.dim());
    }

    const double value = remest::objective(model, policy, args.kappa);
    std::cout << "theta =";
    for (double t : policy.theta) std::cout << ' ' << remest::io::format_double(t);
    std::cout << "\nlambda = " << remest::io::format_double(policy.lambda)
              << "\nobjective = " << remest::io::format_double(value)
              << "\ntransmit_prob = "
              << remest::io::format_double(remest::transmit_prob(model, policy))
              << "\nconverged = " << (trace.converged ? "true" : "false")
              << " (outer=" << trace.outer_iters << ", inner=" << trace.total_inner_iters
              << ")\n";
    return trace.converged ? kExitOk : kExitNotConverged;
}

void write_report_files(const std::string& out, const std::string& format,
                        const std::string& csv, const remest::io::json& j) {
    if (format == "csv" || format == "both") {
        remest::io::write_file(out + ".csv", csv);
    }
    if (format == "json" || format == "both") {
        remest::io::write_file(out + ".json", j.dump(2) + "\n");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Threshold-policy design and simulation for mean-field remote estimation "
                 "over a collision channel"};
    app.require_subcommand(1);

    // --- solve ---
    SolveArgs solve_args;
    auto* solve = app.add_subcommand("solve", "Design a policy for a known mixture model");
    solve->add_option("--model", solve_args.model_file, "Mixture model JSON")->required();
    solve->add_option("--kappa", solve_args.kappa, "Asymptotic capacity in (0,1)")->required();
    solve->add_option("--delta", solve_args.delta, "Capacity back-off in [0, kappa)");
    solve->add_option("--out", solve_args.out, "Output policy JSON path");
    solve->add_option("--trace", solve_args.trace_file, "Optional trace CSV path");
    solve->add_option("--theta0", solve_args.theta0,
                      "Initial theta override (default: model mean)");
    solve->add_option("--theta-tol", solve_args.theta_tol, "Inner convergence tolerance");
    solve->add_option("--lambda-tol", solve_args.lambda_tol, "Constraint residual tolerance");

    // --- fit ---
    std::string fit_samples, fit_out = "model.json";
    auto* fitcmd = app.add_subcommand("fit", "Fit a kernel density estimate from samples");
    fitcmd->add_option("--samples", fit_samples, "Sample CSV (one row per sample)")->required();
    fitcmd->add_option("--out", fit_out, "Output model JSON path");

    // --- design ---
    SolveArgs design_args;
    std::string design_samples;
    auto* design = app.add_subcommand("design", "Fit a density estimate, then design a policy");
    design->add_option("--samples", design_samples, "Sample CSV")->required();
    design->add_option("--kappa", design_args.kappa, "Asymptotic capacity in (0,1)")->required();
    design->add_option("--delta", design_args.delta, "Capacity back-off in [0, kappa)");
    design->add_option("--out", design_args.out, "Output policy JSON path");
    design->add_option("--trace", design_args.trace_file, "Optional trace CSV path");
    design->add_option("--theta-tol", design_args.theta_tol, "Inner convergence tolerance");
    design->add_option("--lambda-tol", design_args.lambda_tol, "Constraint residual tolerance");

    // --- simulate ---
    std::string sim_model, sim_policy, sim_out = "simulation", sim_format = "both";
    long sim_n = 1000, sim_trials = 100;
    std::uint64_t sim_seed = 0;
    double sim_kappa = -1.0;
    auto* sim = app.add_subcommand("simulate", "Finite-n Monte Carlo over a collision channel");
    sim->add_option("--model", sim_model, "Mixture model JSON")->required();
    sim->add_option("--policy", sim_policy, "Policy JSON")->required();
    sim->add_option("--n", sim_n, "Number of sensors")->required();
    sim->add_option("--kappa", sim_kappa, "Channel kappa_bar (default: policy file value)");
    sim->add_option("--trials", sim_trials, "Monte Carlo trials")->required();
    sim->add_option("--seed", sim_seed, "RNG seed")->required();
    sim->add_option("--out", sim_out, "Output path prefix (.csv/.json appended)");
    sim->add_option("--format", sim_format, "csv|json|both")
        ->check(CLI::IsMember({"csv", "json", "both"}));

    // --- experiment ---
    std::string exp_spec, exp_out = "experiment", exp_format = "both";
    auto* exp = app.add_subcommand("experiment", "Run an (M, delta) design sweep");
    exp->add_option("spec", exp_spec, "Experiment spec JSON")->required();
    exp->add_option("--out", exp_out, "Output path prefix (.csv/.json appended)");
    exp->add_option("--format", exp_format, "csv|json|both")
        ->check(CLI::IsMember({"csv", "json", "both"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (solve->parsed()) {
            return solve_model(remest::io::load_mixture(solve_args.model_file), solve_args);
        }
        if (fitcmd->parsed()) {
            const remest::SampleBatch batch = remest::io::load_samples_csv(fit_samples);
            const remest::BandwidthReport bw = remest::bandwidth(batch);
            remest::io::save_mixture(fit_out, remest::fit(batch));
            remest::io::json bj;
            bj["per_axis_h"] = bw.per_axis_h;
            bj["per_axis_s"] = bw.per_axis_s;
            bj["per_axis_Q"] = bw.per_axis_q;
            bj["M"] = batch.size();
            std::cout << bj.dump(2) << "\n";
            return kExitOk;
        }
        if (design->parsed()) {
            const remest::SampleBatch batch = remest::io::load_samples_csv(design_samples);
            return solve_model(remest::fit(batch), design_args);
        }
        if (sim->parsed()) {
            const auto model = remest::io::load_mixture(sim_model);
            const auto pf = remest::io::load_policy(sim_policy);
            const double kappa = sim_kappa > 0.0 ? sim_kappa : pf.kappa_bar;
            const auto channel = remest::ChannelSpec::from_kappa(sim_n, kappa);
            const auto report =
                remest::simulate(model, pf.policy, channel, sim_trials, sim_seed);
            write_report_files(sim_out, sim_format, remest::io::simulation_csv(channel, report),
                               remest::io::simulation_to_json(channel, report));
            std::cout << remest::io::simulation_to_json(channel, report).dump(2) << "\n";
            return kExitOk;
        }
        if (exp->parsed()) {
            const auto spec = remest::io::load_experiment_spec(exp_spec);
            const auto report = remest::run_experiment(spec);
            write_report_files(exp_out, exp_format, remest::io::experiment_csv(report),
                               remest::io::experiment_to_json(report));
            std::cout << "cells = " << report.cells.size() << "\n";
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}
