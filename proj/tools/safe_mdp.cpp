#include "safedp/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace cli = safedp::cli;

namespace {

int emit(const cli::RunResult& result, const std::string& csv_path) {
    std::cout << cli::render(result.report);
    if (!csv_path.empty() && !result.csv.empty()) {
        std::ofstream out(csv_path);
        if (!out) {
            std::cerr << "cannot write " << csv_path << "\n";
            return cli::exit_io;
        }
        out << result.csv;
    }
    return result.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Safety-constrained dynamic programming on finite MDPs"};
    app.require_subcommand(1);
    bool timings = false;
    app.add_flag("--timings", timings, "Add wall-clock timings to the report");

    std::string model_path, policy_path, csv_path;

    auto* validate = app.add_subcommand("validate", "Check a model document");
    validate->add_option("model", model_path, "Model JSON")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a policy");
    eval->add_option("model", model_path, "Model JSON")->required();
    eval->add_option("policy", policy_path, "Policy JSON")->required();
    eval->add_option("--csv", csv_path, "Write V, S, T and G as CSV");

    cli::SolveOptions solve_opts;
    double p = 0, q = 0, tol = 0;
    auto* solve = app.add_subcommand("solve", "Compute an optimal policy");
    solve->add_option("model", solve_opts.model_path, "Model JSON")->required();
    solve->add_option("--mode", solve_opts.mode, "Solver")
        ->required()
        ->check(CLI::IsMember({"unconstrained", "safest", "p-safe", "relative", "lp", "dual"}));
    auto* p_opt = solve->add_option("--p", p, "Safety bound");
    auto* q_opt = solve->add_option("--q", q, "Relative safety bound");
    auto* tol_opt = solve->add_option("--tol", tol, "Stopping tolerance");
    solve->add_option("--seed", solve_opts.seed, "Seed recorded in the report");
    solve->add_flag("--oracle", solve_opts.oracle, "Compare against pure-policy enumeration");
    solve->add_option("--cap", solve_opts.cap, "Limit on enumerated pure policies");
    solve->add_option("--dump-tableau", solve_opts.dump_tableau, "lp mode: write the tableaux");

    cli::SimulateOptions sim_opts;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates against closed forms");
    simulate->add_option("model", sim_opts.model_path, "Model JSON")->required();
    simulate->add_option("policy", sim_opts.policy_path, "Policy JSON")->required();
    simulate->add_option("--start", sim_opts.start, "Start state label")->required();
    simulate->add_option("--n", sim_opts.n, "Number of trajectories");
    simulate->add_option("--seed", sim_opts.seed, "Master seed");
    simulate->add_option("--max-steps", sim_opts.max_steps, "Truncation length");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::exit_invalid;
    }

    if (*validate) {
        cli::CommonOptions opts;
        opts.timings = timings;
        return emit(cli::cmd_validate(model_path, opts), "");
    }
    if (*eval) {
        cli::EvalOptions opts;
        opts.timings = timings;
        opts.model_path = model_path;
        opts.policy_path = policy_path;
        return emit(cli::cmd_eval(opts), csv_path);
    }
    if (*solve) {
        solve_opts.timings = timings;
        if (*p_opt)
            solve_opts.p = p;
        if (*q_opt)
            solve_opts.q = q;
        if (*tol_opt)
            solve_opts.tol = tol;
        return emit(cli::cmd_solve(solve_opts), "");
    }
    sim_opts.timings = timings;
    return emit(cli::cmd_simulate(sim_opts), "");
}
