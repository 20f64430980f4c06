#pragma once

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

namespace safedp::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_invalid = 2,
    exit_io = 3,
    exit_not_transient = 4,
    exit_infeasible = 5,
    exit_cap_exceeded = 6,
};

/// Outcome of one command. report is key-sorted; csv is empty unless the command produces a table.
struct RunResult {
    int exit_code = exit_ok;
    nlohmann::json report;
    std::string csv;
};

struct CommonOptions {
    bool timings = false;
};

struct EvalOptions : CommonOptions {
    std::string model_path;
    std::string policy_path;
};

struct SolveOptions : CommonOptions {
    std::string model_path;
    std::string mode; ///< unconstrained, safest, p-safe, relative, lp, dual
    std::optional<double> p;
    std::optional<double> q;
    std::optional<double> tol;
    std::uint64_t seed = 0;
    bool oracle = false;
    std::size_t cap = 1000000;
    std::string dump_tableau; ///< lp mode: write the tableaux here
};

struct SimulateOptions : CommonOptions {
    std::string model_path;
    std::string policy_path;
    std::string start;
    std::size_t n = 100000;
    std::uint64_t seed = 0;
    std::size_t max_steps = 100000;
};

RunResult cmd_validate(const std::string& model_path, const CommonOptions& opts = {});
RunResult cmd_eval(const EvalOptions& opts);
RunResult cmd_solve(const SolveOptions& opts);
RunResult cmd_simulate(const SimulateOptions& opts);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// x rounded to 12 significant digits; non-finite values become strings.
nlohmann::json number(double x);

/// Report as printed by the tool: two-space indent, trailing newline.
std::string render(const nlohmann::json& report);

} // namespace safedp::cli
