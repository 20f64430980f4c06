#include "safedp/cli.hpp"

#include "safedp/bellman.hpp"
#include "safedp/chain.hpp"
#include "safedp/constrained.hpp"
#include "safedp/evaluation.hpp"
#include "safedp/model.hpp"
#include "safedp/simplex.hpp"
#include "safedp/simulation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace safedp::cli {

using json = nlohmann::json;

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

json taboo_vector(const MdpModel& model, const Vector& v) {
    json out = json::object();
    for (std::size_t i = 0; i < model.n_taboo() && idx(i) < v.size(); ++i)
        out[model.states[i]] = number(v(idx(i)));
    return out;
}

json taboo_matrix(const MdpModel& model, const Matrix& m) {
    json out = json::object();
    for (std::size_t i = 0; i < model.n_taboo(); ++i) {
        json row = json::object();
        for (std::size_t j = 0; j < model.n_taboo(); ++j)
            row[model.states[j]] = number(m(idx(i), idx(j)));
        out[model.states[i]] = std::move(row);
    }
    return out;
}

/// Pure rows print as an action label, randomized rows as {action: weight}.
json policy_json(const MdpModel& model, const Policy& policy) {
    json out = json::object();
    for (std::size_t i = 0; i < model.n_taboo(); ++i) {
        const auto row = policy.probs().row(idx(i));
        int support = 0;
        for (Eigen::Index u = 0; u < row.size(); ++u)
            support += row(u) > prob_tol ? 1 : 0;
        if (support == 1) {
            out[model.states[i]] = model.actions[policy.action(i)];
            continue;
        }
        json dist = json::object();
        for (std::size_t u = 0; u < model.n_actions(); ++u)
            if (row(idx(u)) > prob_tol)
                dist[model.actions[u]] = number(row(idx(u)));
        out[model.states[i]] = std::move(dist);
    }
    return out;
}

json label_list(const MdpModel& model, const std::vector<std::size_t>& states) {
    json out = json::array();
    for (std::size_t i : states)
        out.push_back(model.states[i]);
    return out;
}

json estimate_json(const McEstimate& e) {
    return {{"mean", number(e.mean)}, {"std_error", number(e.std_error)}, {"n", e.n}};
}

struct Context {
    json command;
    json inputs = json::object();
    bool timings = false;
};

std::string read_input(Context& ctx, const std::string& key, const std::string& path) {
    std::string text = read_text_file(path);
    ctx.inputs[key] = {{"path", path}, {"fnv1a", fnv1a_hex(text)}};
    return text;
}

/// Runs body and maps library errors onto exit codes.
RunResult run(Context& ctx, const std::function<void(RunResult&)>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult out;
    out.report["results"] = json::object();
    const auto fail = [&](int code, const std::string& kind, const std::string& message) {
        out.exit_code = code;
        out.report["error"] = {{"kind", kind}, {"message", message}};
    };
    try {
        body(out);
    } catch (const std::ios_base::failure& e) {
        fail(exit_io, "io", e.what());
    } catch (const ParseError& e) {
        fail(exit_invalid, "parse", e.what());
    } catch (const ValidationError& e) {
        fail(exit_invalid, "validation", e.what());
    } catch (const InvalidArgument& e) {
        fail(exit_invalid, "invalid_argument", e.what());
    } catch (const DimensionMismatch& e) {
        fail(exit_invalid, "dimension_mismatch", e.what());
    } catch (const NotTransient& e) {
        fail(exit_not_transient, "not_transient", e.what());
        out.report["error"]["spectral_radius"] = number(e.spectral_radius());
    } catch (const Infeasible& e) {
        fail(exit_infeasible, "infeasible", e.what());
    } catch (const LpInfeasible& e) {
        fail(exit_infeasible, "infeasible", e.what());
    } catch (const CapExceeded& e) {
        fail(exit_cap_exceeded, "cap_exceeded", e.what());
    } catch (const MaxIterExceeded& e) {
        fail(exit_failure, "max_iter_exceeded", e.what());
        out.report["error"]["iterations"] = e.iterations();
    } catch (const Error& e) {
        fail(exit_failure, "error", e.what());
    }
    out.report["command"] = std::move(ctx.command);
    out.report["inputs"] = std::move(ctx.inputs);
    out.report["exit_code"] = out.exit_code;
    if (ctx.timings) {
        const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - t0;
        out.report["timings"] = {{"total_ms", number(ms.count())}};
    }
    return out;
}

void require_probability(const std::optional<double>& p, const char* mode) {
    if (!p)
        throw InvalidArgument(std::string("mode ") + mode + " needs --p");
    if (!(*p >= 0.0 && *p <= 1.0))
        throw InvalidArgument("--p must lie in [0, 1]");
}

/// States whose minimal safety already exceeds p.
std::vector<std::size_t> unreachable_bound(const MdpModel& model, double p) {
    const auto safest = safest_policy(model, Vector::Zero(idx(model.n_taboo())));
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < model.n_taboo(); ++i)
        if (safest.value(idx(i)) > p + safety_tol)
            out.push_back(i);
    return out;
}

void add_oracle(const MdpModel& model, double p, std::size_t cap, double objective, json& results) {
    const auto bf = brute_force_constrained(model, p, cap);
    json oracle = {{"feasible", bf.feasible}, {"admissible_count", bf.admissible_count}};
    if (bf.feasible) {
        oracle["value"] = taboo_vector(model, bf.value);
        oracle["policy"] = policy_json(model, *bf.policy);
        oracle["gap"] = number(bf.value.sum() - objective);
    }
    results["oracle"] = std::move(oracle);
}

void solve_lp_mode(const MdpModel& model, const SolveOptions& opts, json& results) {
    const double p = *opts.p;
    const auto problems = build_lp(model, p);
    if (!opts.dump_tableau.empty()) {
        std::ofstream out(opts.dump_tableau);
        if (!out)
            throw std::ios_base::failure("cannot write " + opts.dump_tableau);
        for (const auto& prob : problems) {
            const auto res = solve_lp(prob);
            out << "# start " << model.states[prob.start] << "\n";
            write_tableau(out, prob.lp, &res);
        }
    }
    const auto sol = solve_lp(problems);
    results["value"] = taboo_vector(model, sol.value);
    results["l"] = taboo_vector(model, sol.l);
    results["multipliers"] = taboo_vector(model, sol.multipliers);
    results["objective"] = number(sol.objective);
    std::size_t pivots = 0;
    for (const auto& r : sol.raw)
        pivots += r.pivots;
    results["pivots"] = pivots;

    // Greedy policies of the inner problem at each start's multiplier; keep the
    // admissible one with the smallest total value.
    std::optional<PolicyEvaluation> best;
    std::optional<Policy> best_policy;
    for (std::size_t k = 0; k < model.n_taboo(); ++k) {
        const Vector lambda = Vector::Constant(idx(model.n_taboo()), sol.multipliers(idx(k)));
        const auto inner = dual_inner(model, lambda, p);
        Policy pi = pure_policy(model, inner.actions);
        try {
            auto eval = evaluate(model, pi);
            if ((eval.safety.array() > p + safety_tol).any())
                continue;
            if (!best || eval.value.sum() < best->value.sum()) {
                best = std::move(eval);
                best_policy = std::move(pi);
            }
        } catch (const NotTransient&) {
        }
    }
    if (best) {
        results["policy"] = policy_json(model, *best_policy);
        results["policy_value"] = taboo_vector(model, best->value);
        results["policy_safety"] = taboo_vector(model, best->safety);
    } else {
        results["policy"] = nullptr;
    }
    if (opts.oracle)
        add_oracle(model, p, opts.cap, sol.objective, results);
}

void constrained_fields(const MdpModel& model, const ConstrainedSolveReport& rep, json& results) {
    results["method"] = rep.method;
    results["converged"] = rep.converged;
    results["iterations"] = rep.iterations;
    results["value"] = taboo_vector(model, rep.value);
    if (rep.policy) {
        results["policy"] = policy_json(model, *rep.policy);
        results["policy_value"] = taboo_vector(model, rep.policy_value);
        results["policy_safety"] = taboo_vector(model, rep.policy_safety);
    } else {
        results["policy"] = nullptr;
    }
    if (rep.multipliers.size() > 0)
        results["multipliers"] = taboo_vector(model, rep.multipliers);
    if (!std::isnan(rep.gap))
        results["gap"] = number(rep.gap);
}

void solve_dual_mode(const MdpModel& model, const SolveOptions& opts, json& results) {
    const double p = *opts.p;
    DualOptions dopts;
    if (opts.tol)
        dopts.tol = *opts.tol;
    std::optional<BruteForceResult> bf;
    if (opts.oracle) {
        bf = brute_force_constrained(model, p, opts.cap);
        if (bf->feasible)
            dopts.oracle = bf->value;
    }
    ConstrainedSolveReport rep;
    bool converged = true;
    try {
        rep = dual_ascent(model, p, dopts);
    } catch (const DualNotConverged& e) {
        rep = e.report();
        converged = false;
    }
    if (!rep.feasible) {
        results["infeasible_states"] = label_list(model, rep.infeasible_states);
        throw Infeasible("p-safety cannot be met at every taboo state");
    }
    constrained_fields(model, rep, results);
    results["objective"] = number(rep.value.sum());
    if (bf)
        add_oracle(model, p, opts.cap, rep.value.sum(), results);
    if (!converged)
        throw MaxIterExceeded("dual ascent did not converge", rep.value, rep.iterations);
}

} // namespace

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json number(double x) {
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    const double r = std::strtod(buf, nullptr);
    return r == 0.0 ? 0.0 : r; // drop negative zero
}

std::string render(const json& report) { return report.dump(2) + "\n"; }

RunResult cmd_validate(const std::string& model_path, const CommonOptions& opts) {
    Context ctx{{{"name", "validate"}, {"model", model_path}}, json::object(), opts.timings};
    return run(ctx, [&](RunResult& out) {
        const std::string text = read_input(ctx, "model", model_path);
        json violations = json::array();
        try {
            const MdpModel model = parse_model(text);
            for (const auto& v : validate_model(model))
                violations.push_back({{"path", v.path}, {"message", v.message}});
            out.report["results"]["states"] = model.n_states();
            out.report["results"]["actions"] = model.n_actions();
        } catch (const ParseError& e) {
            violations.push_back({{"path", "document"}, {"message", e.what()}});
        } catch (const ValidationError& e) {
            violations.push_back({{"path", "document"}, {"message", e.what()}});
        }
        out.report["results"]["valid"] = violations.empty();
        out.report["results"]["violations"] = std::move(violations);
        if (!out.report["results"]["valid"].get<bool>())
            out.exit_code = exit_invalid;
    });
}

RunResult cmd_eval(const EvalOptions& opts) {
    Context ctx{{{"name", "eval"}, {"model", opts.model_path}, {"policy", opts.policy_path}},
                json::object(), opts.timings};
    return run(ctx, [&](RunResult& out) {
        const MdpModel model = load_model(read_input(ctx, "model", opts.model_path));
        const Policy policy = load_policy(model, read_input(ctx, "policy", opts.policy_path));
        const auto bad = validate_policy(model, policy);
        if (!bad.empty())
            throw ValidationError(bad.front().path + ": " + bad.front().message);

        const auto eval = evaluate(model, policy);
        const Matrix P = induced_matrix(model, policy);
        const std::size_t h = model.n_taboo();
        double residual = 0.0;
        for (std::size_t k = 0; k < h; ++k) {
            Vector mu = Vector::Zero(idx(model.n_states()));
            mu(idx(k)) = 1.0;
            residual = std::max(residual, evolution_residual(mu, occupation(model, policy, mu),
                                                             hitting(model, policy, mu), P));
        }
        json& r = out.report["results"];
        r["value"] = taboo_vector(model, eval.value);
        r["safety"] = taboo_vector(model, eval.safety);
        r["reach"] = taboo_vector(model, eval.reach);
        r["green"] = taboo_matrix(model, eval.G);
        r["reward"] = taboo_vector(model, eval.inputs.reward);
        r["forbidden_exit"] = taboo_vector(model, eval.inputs.forbidden_exit);
        r["target_exit"] = taboo_vector(model, eval.inputs.target_exit);
        r["evolution_residual"] = number(residual);
        r["policy"] = policy_json(model, policy);

        std::ostringstream csv;
        csv << "state,value,safety,reach";
        for (std::size_t j = 0; j < h; ++j)
            csv << ",G[" << model.states[j] << "]";
        csv << "\n";
        const auto cell = [](double x) { return number(x).dump(); };
        for (std::size_t i = 0; i < h; ++i) {
            csv << model.states[i] << "," << cell(eval.value(idx(i))) << ","
                << cell(eval.safety(idx(i))) << "," << cell(eval.reach(idx(i)));
            for (std::size_t j = 0; j < h; ++j)
                csv << "," << cell(eval.G(idx(i), idx(j)));
            csv << "\n";
        }
        out.csv = csv.str();
    });
}

RunResult cmd_solve(const SolveOptions& opts) {
    json echo = {{"name", "solve"}, {"model", opts.model_path}, {"mode", opts.mode},
                 {"seed", opts.seed}, {"oracle", opts.oracle}, {"cap", opts.cap}};
    if (opts.p)
        echo["p"] = number(*opts.p);
    if (opts.q)
        echo["q"] = number(*opts.q);
    if (opts.tol)
        echo["tol"] = number(*opts.tol);
    Context ctx{std::move(echo), json::object(), opts.timings};
    return run(ctx, [&](RunResult& out) {
        const MdpModel model = load_model(read_input(ctx, "model", opts.model_path));
        json& r = out.report["results"];
        BellmanOptions bopts;
        if (opts.tol) {
            if (!(*opts.tol > 0.0))
                throw InvalidArgument("--tol must be positive");
            bopts.tol = *opts.tol;
        }
        const Vector zero = Vector::Zero(idx(model.n_taboo()));
        const auto bellman_fields = [&](const BellmanResult& res) {
            r["value"] = taboo_vector(model, res.value);
            r["policy"] = policy_json(model, res.policy);
            r["iterations"] = res.iterations;
            r["residual"] = number(res.residual);
        };

        if (opts.mode == "unconstrained") {
            bellman_fields(value_iteration(model, zero, bopts));
        } else if (opts.mode == "safest") {
            bellman_fields(safest_policy(model, zero, bopts));
        } else if (opts.mode == "p-safe") {
            require_probability(opts.p, "p-safe");
            if (const auto bad = unreachable_bound(model, *opts.p); !bad.empty()) {
                r["infeasible_states"] = label_list(model, bad);
                throw Infeasible("minimal safety exceeds p at some taboo state");
            }
            const auto rep = constrained_vi_pure(model, *opts.p, bopts, opts.cap);
            constrained_fields(model, rep, r);
            r["coordinatewise_min"] = taboo_vector(model, rep.coordinatewise_min);
            r["single_policy_realizes"] = rep.single_policy_realizes;
        } else if (opts.mode == "relative") {
            if (!opts.q)
                throw InvalidArgument("mode relative needs --q");
            json admissible = json::object();
            const auto sets = relative_admissible(model, *opts.q);
            for (std::size_t i = 0; i < sets.size(); ++i) {
                json acts = json::array();
                for (std::size_t u : sets[i].pure_actions)
                    acts.push_back(model.actions[u]);
                admissible[model.states[i]] = std::move(acts);
            }
            r["admissible_actions"] = std::move(admissible);
            constrained_fields(model, relative_vi(model, *opts.q, bopts), r);
        } else if (opts.mode == "lp") {
            require_probability(opts.p, "lp");
            if (const auto bad = unreachable_bound(model, *opts.p); !bad.empty()) {
                r["infeasible_states"] = label_list(model, bad);
                throw Infeasible("minimal safety exceeds p at some taboo state");
            }
            solve_lp_mode(model, opts, r);
        } else if (opts.mode == "dual") {
            require_probability(opts.p, "dual");
            solve_dual_mode(model, opts, r);
        } else {
            throw InvalidArgument("unknown mode \"" + opts.mode + "\"");
        }
    });
}

RunResult cmd_simulate(const SimulateOptions& opts) {
    Context ctx{{{"name", "simulate"},
                 {"model", opts.model_path},
                 {"policy", opts.policy_path},
                 {"start", opts.start},
                 {"n", opts.n},
                 {"seed", opts.seed},
                 {"max_steps", opts.max_steps}},
                json::object(),
                opts.timings};
    return run(ctx, [&](RunResult& out) {
        if (opts.n == 0)
            throw InvalidArgument("--n must be at least 1");
        const MdpModel model = load_model(read_input(ctx, "model", opts.model_path));
        const Policy policy = load_policy(model, read_input(ctx, "policy", opts.policy_path));
        const std::size_t start = model.state_index(opts.start);

        const auto eval = evaluate(model, policy);
        const double s = extend_safety(model, eval.safety)(idx(start));
        const double t = extend_reach(model, eval.reach)(idx(start));
        const double v = extend_value(model, eval.value)(idx(start));

        const auto mc = mc_estimates(model, policy, start, opts.n, opts.seed, opts.max_steps);
        const auto within = [](const McEstimate& e, double exact) {
            return std::abs(e.mean - exact) <= 3.0 * e.std_error + 1e-12;
        };
        json& r = out.report["results"];
        r["estimates"] = {{"safety", estimate_json(mc.safety)},
                          {"reach", estimate_json(mc.reach)},
                          {"value", estimate_json(mc.value)}};
        r["analytic"] = {{"safety", number(s)}, {"reach", number(t)}, {"value", number(v)}};
        r["within_3se"] = {{"safety", within(mc.safety, s)},
                           {"reach", within(mc.reach, t)},
                           {"value", within(mc.value, v)}};
        r["truncated"] = mc.truncated;
        json visits = json::object();
        for (std::size_t i = 0; i < model.n_taboo(); ++i)
            visits[model.states[i]] = estimate_json(mc.visits[i]);
        r["visits"] = std::move(visits);
        r["occupation"] = [&] {
            Vector mu = Vector::Zero(idx(model.n_states()));
            mu(idx(start)) = 1.0;
            return taboo_vector(model, occupation(model, policy, mu));
        }();
    });
}

} // namespace safedp::cli
