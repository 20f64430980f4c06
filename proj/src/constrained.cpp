#include "safedp/constrained.hpp"

#include "safedp/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace safedp {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

/// Q, R, K of a pure policy read directly from the decision blocks.
struct PureRows {
    Matrix Q;
    Vector reward;
    Vector forbidden_exit;
};

PureRows pure_rows(const DecisionBlocks& blocks, const std::vector<std::size_t>& actions) {
    const auto h = idx(blocks.n_taboo());
    PureRows out{Matrix(h, h), Vector(h), Vector(h)};
    for (Eigen::Index i = 0; i < h; ++i) {
        const auto u = idx(actions[static_cast<std::size_t>(i)]);
        out.Q.row(i) = blocks.Q[static_cast<std::size_t>(u)].row(i);
        out.reward(i) = blocks.reward(i, u);
        out.forbidden_exit(i) = blocks.forbidden_exit(i, u);
    }
    return out;
}

/// S of a pure policy. Recurrent classes inside H get the minimal fixed point.
Vector pure_safety(const DecisionBlocks& blocks, const std::vector<std::size_t>& actions) {
    const auto rows = pure_rows(blocks, actions);
    if (check_transient(rows.Q).transient) {
        const auto h = rows.Q.rows();
        return (Matrix::Identity(h, h) - rows.Q).partialPivLu().solve(rows.forbidden_exit);
    }
    return iterate_affine(rows.Q, rows.forbidden_exit, Vector::Zero(rows.Q.rows()),
                          {.tol = 1e-14, .max_iter = 10000000})
        .values;
}

bool is_safe(const Vector& s, double p) { return (s.array() <= p + safety_tol).all(); }

/// Cutting-plane model of a concave function of one variable on [0, inf).
class ScalarCuts {
public:
    void add(double x, double f, double g) {
        reach_ = std::max(reach_, x);
        const Cut c{x, f, g};
        if (g > 0.0) {
            for (const auto& b : falling_)
                pair(c, b);
            rising_.push_back(c);
        } else {
            offer(0.0, at(c, 0.0));
            for (const auto& a : rising_)
                pair(a, c);
            falling_.push_back(c);
        }
    }
    double upper() const noexcept { return upper_; }
    /// Maximizer of the model, or a doubling step while every cut still rises.
    double next_probe() const noexcept {
        return std::isfinite(upper_) ? argmax_ : std::min(2.0 * std::max(1.0, reach_), max_probe);
    }

private:
    struct Cut {
        double x, f, g;
    };
    static double at(const Cut& c, double y) { return c.f + c.g * (y - c.x); }
    void offer(double y, double v) {
        if (v < upper_) {
            upper_ = v;
            argmax_ = y;
        }
    }
    void pair(const Cut& a, const Cut& b) {
        const double y = std::max(0.0, (b.f - a.f + a.g * a.x - b.g * b.x) / (a.g - b.g));
        offer(y, std::min(at(a, y), at(b, y)));
    }

    static constexpr double max_probe = 1e15;
    std::vector<Cut> rising_, falling_;
    double reach_ = 0.0;
    double upper_ = std::numeric_limits<double>::infinity();
    double argmax_ = 0.0;
};

} // namespace

Vector lagrangian(const MdpModel& model, const Policy& policy, const Vector& multipliers, double p) {
    if (multipliers.size() != idx(model.n_taboo()))
        throw DimensionMismatch("one multiplier per taboo state expected");
    const auto eval = evaluate(model, policy);
    return eval.value + multipliers.cwiseProduct(eval.safety - Vector::Constant(eval.safety.size(), p));
}

Matrix dual_offsets(const DecisionBlocks& blocks, const Vector& multipliers, double p) {
    const auto h = idx(blocks.n_taboo());
    if (multipliers.size() != h)
        throw DimensionMismatch("one multiplier per taboo state expected");
    Matrix offsets(h, idx(blocks.n_actions()));
    for (std::size_t u = 0; u < blocks.n_actions(); ++u) {
        const Vector neighbour = blocks.Q[u] * multipliers;
        offsets.col(idx(u)) = blocks.forbidden_exit.col(idx(u)).cwiseProduct(multipliers) -
                              p * (multipliers - neighbour);
    }
    return offsets;
}

DualInnerResult dual_inner(const MdpModel& model, const Vector& multipliers, double p,
                           const BellmanOptions& opts, const Vector* warm_start) {
    if ((multipliers.array() < 0.0).any())
        throw InvalidArgument("multipliers must be nonnegative");
    const DecisionBlocks blocks(model);
    const Matrix stage = blocks.reward + dual_offsets(blocks, multipliers, p);
    const Vector start = warm_start ? *warm_start : Vector::Zero(idx(model.n_taboo()));
    auto res = minimize_stage_cost(model, blocks, stage, start, opts);
    return {std::move(res.value), std::move(res.actions), res.iterations};
}

ConstrainedSolveReport dual_ascent(const MdpModel& model, double p, const DualOptions& opts) {
    const std::size_t h = model.n_taboo();
    ConstrainedSolveReport report;
    report.method = "dual";

    const auto safest = safest_policy(model, Vector::Zero(idx(h)), {.tol = 1e-13});
    for (std::size_t k = 0; k < h; ++k)
        if (safest.value(idx(k)) > p + safety_tol)
            report.infeasible_states.push_back(k);
    if (!report.infeasible_states.empty())
        return report;
    report.feasible = true;

    const DecisionBlocks blocks(model);
    Vector lambda = Vector::Zero(idx(h));
    Vector best_q = Vector::Constant(idx(h), -std::numeric_limits<double>::infinity());
    Vector best_lambda = Vector::Zero(idx(h));
    std::vector<Vector> warm(h, Vector::Zero(idx(h)));
    std::vector<std::vector<std::size_t>> inner_actions(h);
    std::vector<Vector> inner_safety(h);
    std::vector<ScalarCuts> cuts(h);
    std::vector<double> polished(h, -1.0);

    // q_k at the constant multiplier x; returns the greedy actions and their safety.
    const auto probe = [&](std::size_t k, double x, std::vector<std::size_t>& actions, Vector& s) {
        const Vector flat = Vector::Constant(idx(h), x);
        const Matrix stage = blocks.reward + dual_offsets(blocks, flat, p);
        auto res = minimize_stage_cost(model, blocks, stage, warm[k], opts.inner);
        s = pure_safety(blocks, res.actions);
        actions = std::move(res.actions);
        warm[k] = std::move(res.value);
        const double qk = warm[k](idx(k));
        cuts[k].add(x, qk, s(idx(k)) - p);
        if (qk > best_q(idx(k))) {
            best_q(idx(k)) = qk;
            best_lambda(idx(k)) = x;
        }
    };

    std::optional<std::vector<std::size_t>> feasible_actions;
    Vector feasible_safety;
    report.dual_bound = Vector::Constant(idx(h), std::numeric_limits<double>::infinity());
    for (std::size_t n = 0; n < opts.max_outer; ++n) {
        const double alpha = opts.alpha0 / (1.0 + static_cast<double>(n) / opts.decay);
        parallel_for(h, opts.exec, [&](std::size_t k) {
            probe(k, lambda(idx(k)), inner_actions[k], inner_safety[k]);
            // Also query the cut model; this does not move lambda.
            const double x = cuts[k].next_probe();
            if (opts.probes && x != polished[k] && x != lambda(idx(k))) {
                polished[k] = x;
                std::vector<std::size_t> actions;
                Vector s;
                probe(k, x, actions, s);
            }
        });

        double step = 0.0;
        bool certified = true;
        for (std::size_t k = 0; k < h; ++k) {
            const double next = std::max(0.0, lambda(idx(k)) + alpha * (inner_safety[k](idx(k)) - p));
            step = std::max(step, std::abs(next - lambda(idx(k))));
            lambda(idx(k)) = next;
            if (is_safe(inner_safety[k], p)) {
                feasible_actions = inner_actions[k];
                feasible_safety = inner_safety[k];
            }
            report.dual_bound(idx(k)) = cuts[k].upper();
            certified = certified &&
                        cuts[k].upper() - best_q(idx(k)) <= opts.tol * (1.0 + std::abs(best_q(idx(k))));
        }
        report.iterations = n + 1;
        if (opts.oracle)
            report.gap = (*opts.oracle - best_q).cwiseAbs().sum();
        if (certified || step < opts.tol || (opts.oracle && report.gap < opts.tol)) {
            report.converged = true;
            break;
        }
    }

    report.value = best_q;
    report.multipliers = best_lambda;
    if (feasible_actions) {
        report.policy = pure_policy(model, *feasible_actions);
        report.policy_value = value(model, *report.policy);
        report.policy_safety = feasible_safety;
    }
    if (!report.converged)
        throw DualNotConverged("dual ascent did not converge in " + std::to_string(opts.max_outer) +
                                   " outer iterations",
                               std::move(report));
    return report;
}

LpProblem build_lp(const MdpModel& model, double p, std::size_t start) {
    const std::size_t h = model.n_taboo();
    if (start >= h)
        throw DimensionMismatch("start state must be a taboo state");
    const DecisionBlocks blocks(model);
    LpProblem out;
    out.start = start;
    out.p = p;
    out.has_multiplier = (blocks.forbidden_exit.array() > 0.0).any();
    const std::size_t n_vars = h + (out.has_multiplier ? 1 : 0);

    std::vector<Vector> rows;
    std::vector<double> rhs;
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t u = 0; u < model.n_actions(); ++u) {
            Vector row = Vector::Zero(idx(n_vars));
            row.head(idx(h)) = -blocks.Q[u].row(idx(i)).transpose();
            row(idx(i)) += 1.0;
            if (out.has_multiplier)
                row(idx(h)) = -blocks.forbidden_exit(idx(i), idx(u));
            const double b = blocks.reward(idx(i), idx(u));
            if (row.cwiseAbs().maxCoeff() == 0.0 && b >= 0.0)
                continue;
            rows.push_back(std::move(row));
            rhs.push_back(b);
            out.lp.row_names.push_back(model.states[i] + "/" + model.actions[u]);
        }

    out.lp.A.resize(idx(rows.size()), idx(n_vars));
    out.lp.b.resize(idx(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.lp.A.row(idx(r)) = rows[r].transpose();
        out.lp.b(idx(r)) = rhs[r];
    }
    out.lp.c = Vector::Zero(idx(n_vars));
    out.lp.c(idx(start)) = 1.0;
    for (std::size_t i = 0; i < h; ++i)
        out.lp.variable_names.push_back("l[" + model.states[i] + "]");
    if (out.has_multiplier) {
        out.lp.c(idx(h)) = -p;
        out.lp.variable_names.push_back("lambda");
    }
    return out;
}

std::vector<LpProblem> build_lp(const MdpModel& model, double p) {
    std::vector<LpProblem> out;
    for (std::size_t k = 0; k < model.n_taboo(); ++k)
        out.push_back(build_lp(model, p, k));
    return out;
}

LpResult solve_lp(const LpProblem& problem) {
    try {
        return solve_simplex(problem.lp);
    } catch (const Unbounded&) {
        // an unbounded dual means no policy meets S(k) <= p from this start
        throw Infeasible("no policy keeps the safety of start state " + std::to_string(problem.start) +
                         " at or below p");
    }
}

LpSolution solve_lp(const std::vector<LpProblem>& problems) {
    const auto h = idx(problems.size());
    LpSolution out{Vector::Zero(h), Vector::Zero(h), Vector::Zero(h), 0.0, {}};
    for (const auto& problem : problems) {
        auto res = solve_lp(problem);
        const auto k = idx(problem.start);
        out.l(k) = res.x(k);
        if (problem.has_multiplier)
            out.multipliers(k) = res.x(res.x.size() - 1);
        out.value(k) = out.l(k) - problem.p * out.multipliers(k);
        out.raw.push_back(std::move(res));
    }
    out.objective = out.value.sum();
    return out;
}

std::vector<std::optional<PurePolicyRecord>> evaluate_pure_policies(const MdpModel& model,
                                                                    std::size_t cap, Exec exec) {
    const std::size_t count = pure_policy_count(model);
    if (count > cap)
        throw CapExceeded("pure policy count " + std::to_string(count) + " exceeds cap " +
                          std::to_string(cap));
    const DecisionBlocks blocks(model);
    const auto h = idx(model.n_taboo());
    std::vector<std::optional<PurePolicyRecord>> out(count);
    parallel_for(count, exec, [&](std::size_t code) {
        auto actions = decode_pure(model, code);
        const auto rows = pure_rows(blocks, actions);
        if (!check_transient(rows.Q).transient)
            return;
        const auto lu = (Matrix::Identity(h, h) - rows.Q).partialPivLu();
        out[code] = PurePolicyRecord{code, std::move(actions), lu.solve(rows.reward),
                                     lu.solve(rows.forbidden_exit)};
    });
    return out;
}

AdmissibleSet enumerate_admissible(const MdpModel& model, double p, std::size_t cap, Exec exec) {
    auto all = evaluate_pure_policies(model, cap, exec);
    AdmissibleSet out;
    out.total = all.size();
    for (std::size_t code = 0; code < all.size(); ++code) {
        if (!all[code]) {
            out.non_transient.push_back(code);
            continue;
        }
        if (is_safe(all[code]->safety, p))
            out.admissible.push_back(std::move(*all[code]));
    }
    return out;
}

ConeCheck cone_check(const MdpModel& model, const Policy& policy, double p) {
    const auto chain = induced_chain(model, policy);
    const auto inputs = cost_inputs(model, policy);
    const auto h = chain.blocks.Q.rows();
    const Matrix laplacian = Matrix::Identity(h, h) - chain.blocks.Q;
    const Vector m = p * (laplacian * Vector::Ones(h)) - inputs.forbidden_exit;
    ConeCheck out;
    out.alpha = laplacian.partialPivLu().solve(m);
    out.admissible = out.alpha.minCoeff() >= -safety_tol;
    return out;
}

ConstrainedSolveReport constrained_vi_pure(const MdpModel& model, double p, const BellmanOptions& opts,
                                           std::size_t cap) {
    const auto admissible = enumerate_admissible(model, p, cap);
    if (admissible.admissible.empty())
        throw Infeasible("no pure policy satisfies S <= " + std::to_string(p));

    const DecisionBlocks blocks(model);
    const std::size_t h = model.n_taboo();
    // Row i of R_pi + Q(pi) V depends only on pi(i), so the minimum over the
    // admissible set is a minimum over the actions admissible policies use at i.
    Matrix stage = Matrix::Constant(idx(h), idx(model.n_actions()), std::numeric_limits<double>::infinity());
    for (const auto& rec : admissible.admissible)
        for (std::size_t i = 0; i < h; ++i)
            stage(idx(i), idx(rec.actions[i])) = blocks.reward(idx(i), idx(rec.actions[i]));
    const auto fixed = minimize_stage_cost(model, blocks, stage, Vector::Zero(idx(h)), opts);

    ConstrainedSolveReport report;
    report.method = "p-safe";
    report.feasible = true;
    report.converged = true;
    report.value = fixed.value;
    report.iterations = fixed.iterations;
    report.coordinatewise_min = admissible.admissible.front().value;
    for (const auto& rec : admissible.admissible)
        report.coordinatewise_min = report.coordinatewise_min.cwiseMin(rec.value);

    const PurePolicyRecord* best = nullptr;
    const PurePolicyRecord* best_realizer = nullptr;
    for (const auto& rec : admissible.admissible) {
        if (!best || rec.value.sum() < best->value.sum())
            best = &rec;
        if ((rec.value - fixed.value).lpNorm<Eigen::Infinity>() <= 1e-8 &&
            (!best_realizer || rec.value.sum() < best_realizer->value.sum()))
            best_realizer = &rec;
    }
    report.single_policy_realizes = best_realizer != nullptr;
    const auto* chosen = best_realizer ? best_realizer : best;
    report.policy = pure_policy(model, chosen->actions);
    report.policy_value = chosen->value;
    report.policy_safety = chosen->safety;
    return report;
}

double p_to_q(double p) {
    if (!(p >= 0.0 && p < 1.0))
        throw InvalidArgument("p must lie in [0, 1)");
    return p / (1.0 - p);
}

double p_to_q(std::int64_t num, std::int64_t den) {
    if (!(den > 0 && num >= 0 && num < den))
        throw InvalidArgument("p must lie in [0, 1)");
    return static_cast<double>(num) / static_cast<double>(den - num);
}

} // namespace safedp
