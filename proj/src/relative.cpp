#include "safedp/constrained.hpp"

#include <cmath>
#include <limits>

namespace safedp {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

} // namespace

std::vector<RelativeAdmissibleSet> relative_admissible(const MdpModel& model, double q) {
    if (!(q >= 0.0))
        throw InvalidArgument("q must be nonnegative");
    const DecisionBlocks blocks(model);
    const std::size_t m = model.n_actions();
    std::vector<RelativeAdmissibleSet> out(model.n_taboo());
    for (std::size_t i = 0; i < model.n_taboo(); ++i) {
        // slack(u) <= 0 is the per-action form of K <= q L; a distribution d
        // is admissible iff sum_u d(u) slack(u) <= 0.
        std::vector<double> slack(m);
        for (std::size_t u = 0; u < m; ++u)
            slack[u] = blocks.forbidden_exit(idx(i), idx(u)) - q * blocks.target_exit(idx(i), idx(u));
        auto& set = out[i];
        for (std::size_t u = 0; u < m; ++u)
            if (slack[u] <= 0.0) {
                set.pure_actions.push_back(u);
                Vector d = Vector::Zero(idx(m));
                d(idx(u)) = 1.0;
                set.vertices.push_back(std::move(d));
            }
        for (std::size_t s = 0; s < m; ++s) {
            if (!(slack[s] < 0.0))
                continue;
            for (std::size_t v = 0; v < m; ++v) {
                if (!(slack[v] > 0.0))
                    continue;
                // Weight on s that puts the mixture on the boundary.
                const double w = slack[v] / (slack[v] - slack[s]);
                Vector d = Vector::Zero(idx(m));
                d(idx(s)) = w;
                d(idx(v)) = 1.0 - w;
                set.vertices.push_back(std::move(d));
            }
        }
    }
    return out;
}

ConstrainedSolveReport relative_vi(const MdpModel& model, double q, const BellmanOptions& opts) {
    const auto sets = relative_admissible(model, q);
    for (std::size_t i = 0; i < sets.size(); ++i)
        if (sets[i].vertices.empty())
            throw Infeasible("no q-relatively safe distribution at state " + model.states[i]);

    const DecisionBlocks blocks(model);
    const std::size_t h = model.n_taboo();
    const std::size_t m = model.n_actions();
    const double scale = blocks.reward.cwiseAbs().maxCoeff();
    const double bound = opts.divergence_factor * (1.0 + scale * static_cast<double>(h));

    Vector v = Vector::Zero(idx(h));
    std::vector<std::size_t> choice(h, 0);
    // Each state reads only its own row of Q, i.e. its neighbours' values.
    const auto sweep = [&](const Vector& current, Vector& next) {
        Matrix action_cost(idx(h), idx(m));
        for (std::size_t u = 0; u < m; ++u)
            action_cost.col(idx(u)) = blocks.reward.col(idx(u)) + blocks.Q[u] * current;
        for (std::size_t i = 0; i < h; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < sets[i].vertices.size(); ++k) {
                const double cost = action_cost.row(idx(i)).dot(sets[i].vertices[k]);
                if (std::isinf(best) || cost < best - tie_tol * (1.0 + std::abs(best))) {
                    best = cost;
                    choice[i] = k;
                }
            }
            next(idx(i)) = best;
        }
    };

    ConstrainedSolveReport report;
    report.method = "relative";
    report.feasible = true;
    Vector next(idx(h));
    for (std::size_t n = 0; n < opts.max_iter; ++n) {
        sweep(v, next);
        if (!next.allFinite() || next.lpNorm<Eigen::Infinity>() > bound)
            throw Diverging("relative-safety iterates exceed the divergence bound");
        const double delta = (next - v).lpNorm<Eigen::Infinity>();
        v = next;
        if (delta <= opts.tol) {
            sweep(v, next);
            Matrix probs = Matrix::Zero(idx(model.n_states()), idx(m));
            for (std::size_t i = 0; i < h; ++i)
                probs.row(idx(i)) = sets[i].vertices[choice[i]].transpose();
            for (std::size_t i = h; i < model.n_states(); ++i)
                probs(idx(i), 0) = 1.0;
            report.policy = Policy(std::move(probs));
            report.value = v;
            report.iterations = n + 1;
            report.converged = true;
            try {
                const auto eval = evaluate(model, *report.policy);
                report.policy_value = eval.value;
                report.policy_safety = eval.safety;
            } catch (const NotTransient&) {
            }
            return report;
        }
    }
    throw MaxIterExceeded("relative-safety iteration did not converge", v, opts.max_iter);
}

} // namespace safedp
