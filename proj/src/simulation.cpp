#include "safedp/simulation.hpp"

#include "safedp/evaluation.hpp"
#include "safedp/rng.hpp"

#include <cmath>
#include <numeric>

namespace safedp {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

/// Inverse-CDF draw over the nonzero entries of a probability row.
template <class Row>
std::size_t draw(const Row& row, double uniform) {
    double cumulative = 0.0;
    std::size_t last = 0;
    for (Eigen::Index k = 0; k < row.size(); ++k) {
        const double w = row(k);
        if (w <= 0.0)
            continue;
        last = static_cast<std::size_t>(k);
        cumulative += w;
        if (uniform < cumulative)
            return last;
    }
    return last; // rounding left a sliver above the final cumulative sum
}

struct PathWalker {
    const MdpModel& model;
    const Policy& policy;
    std::size_t budget;
    PathBounds bounds;

    void expand(std::size_t state, double mass, std::size_t depth_left) {
        if (depth_left == 0) {
            bounds.mass_remaining += mass;
            return;
        }
        if (++bounds.nodes > budget)
            throw PathExplosion("path enumeration exceeded the node budget of " +
                                std::to_string(budget));
        for (std::size_t u = 0; u < model.n_actions(); ++u) {
            const double pu = policy(state, u);
            if (pu <= 0.0)
                continue;
            bounds.value_lo += mass * pu * model.rho(u, state);
            for (std::size_t j = 0; j < model.n_states(); ++j) {
                const double pj = model.p(state, u, j);
                if (pj <= 0.0)
                    continue;
                const double child = mass * pu * pj;
                if (model.partition.in_forbidden(j))
                    bounds.safety_lo += child;
                else if (model.partition.in_taboo(j))
                    expand(j, child, depth_left - 1);
            }
        }
    }
};

} // namespace

const char* to_string(Absorption a) noexcept {
    switch (a) {
    case Absorption::forbidden:
        return "forbidden";
    case Absorption::target:
        return "target";
    case Absorption::truncated:
        return "truncated";
    }
    return "unknown";
}

double Trajectory::total_reward() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

Trajectory simulate(const MdpModel& model, const Policy& policy, std::size_t start,
                    std::uint64_t seed, std::size_t max_steps, std::uint64_t stream) {
    if (start >= model.n_states())
        throw DimensionMismatch("start state out of range");
    if (policy.n_states() != model.n_states() || policy.n_actions() != model.n_actions())
        throw DimensionMismatch("policy shape does not match the model");
    CounterRng rng(seed, stream);
    Trajectory out;
    std::size_t state = start;
    out.states.push_back(state);
    for (std::size_t step = 0;; ++step) {
        if (model.partition.in_forbidden(state)) {
            out.absorbed_in = Absorption::forbidden;
            return out;
        }
        if (model.partition.in_target(state)) {
            out.absorbed_in = Absorption::target;
            return out;
        }
        if (step == max_steps) {
            out.absorbed_in = Absorption::truncated;
            return out;
        }
        const std::size_t u = draw(policy.probs().row(idx(state)), rng.uniform());
        out.actions.push_back(u);
        out.rewards.push_back(model.rho(u, state));
        state = draw(model.transitions[u].row(idx(state)), rng.uniform());
        out.states.push_back(state);
    }
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values)
            s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

McEstimate estimate(std::span<const double> samples) {
    McEstimate out;
    out.n = samples.size();
    if (out.n == 0)
        return out;
    out.mean = pairwise_sum(samples) / static_cast<double>(out.n);
    if (out.n > 1) {
        std::vector<double> sq(samples.size());
        for (std::size_t k = 0; k < samples.size(); ++k)
            sq[k] = (samples[k] - out.mean) * (samples[k] - out.mean);
        const double var = pairwise_sum(sq) / static_cast<double>(out.n - 1);
        out.std_error = std::sqrt(var / static_cast<double>(out.n));
    }
    return out;
}

McReport mc_estimates(const MdpModel& model, const Policy& policy, std::size_t start, std::size_t n,
                      std::uint64_t seed, std::size_t max_steps, Exec exec) {
    if (n == 0)
        throw InvalidArgument("need at least one trajectory");
    const std::size_t h = model.n_taboo();
    std::vector<Absorption> outcome(n);
    std::vector<double> reward(n);
    std::vector<double> visits(n * h, 0.0);
    parallel_for(n, exec, [&](std::size_t t) {
        const auto traj = simulate(model, policy, start, seed, max_steps, t);
        outcome[t] = traj.absorbed_in;
        reward[t] = traj.total_reward();
        for (std::size_t s : traj.states)
            if (model.partition.in_taboo(s))
                visits[t * h + s] += 1.0;
    });

    McReport report;
    std::vector<double> s_samples, t_samples, v_samples;
    std::vector<std::vector<double>> visit_samples(h);
    for (std::size_t t = 0; t < n; ++t) {
        if (outcome[t] == Absorption::truncated) {
            ++report.truncated;
            continue;
        }
        s_samples.push_back(outcome[t] == Absorption::forbidden ? 1.0 : 0.0);
        t_samples.push_back(outcome[t] == Absorption::target ? 1.0 : 0.0);
        v_samples.push_back(reward[t]);
        for (std::size_t i = 0; i < h; ++i)
            visit_samples[i].push_back(visits[t * h + i]);
    }
    report.safety = estimate(s_samples);
    report.reach = estimate(t_samples);
    report.value = estimate(v_samples);
    for (const auto& vs : visit_samples)
        report.visits.push_back(estimate(vs));
    return report;
}

PathBounds exhaustive_paths(const MdpModel& model, const Policy& policy, std::size_t start,
                            std::size_t depth, std::size_t node_budget) {
    if (depth > max_path_depth)
        throw InvalidArgument("path depth is limited to 64");
    if (start >= model.n_states())
        throw DimensionMismatch("start state out of range");
    PathWalker walker{model, policy, node_budget, {}};
    if (model.partition.in_forbidden(start))
        walker.bounds.safety_lo = 1.0;
    else if (model.partition.in_taboo(start))
        walker.expand(start, 1.0, depth);
    walker.bounds.safety_hi = walker.bounds.safety_lo + walker.bounds.mass_remaining;
    return walker.bounds;
}

BruteForceResult brute_force_constrained(const MdpModel& model, double p, std::size_t cap) {
    const std::size_t count = pure_policy_count(model);
    if (count > cap)
        throw CapExceeded("pure policy count " + std::to_string(count) + " exceeds cap " +
                          std::to_string(cap));
    BruteForceResult best;
    double best_sum = 0.0;
    for (std::size_t code = 0; code < count; ++code) {
        const auto actions = decode_pure(model, code);
        const Policy pi = pure_policy(model, actions);
        PolicyEvaluation eval;
        try {
            eval = evaluate(model, pi);
        } catch (const NotTransient&) {
            continue;
        }
        ++best.evaluated;
        if ((eval.safety.array() > p + 1e-10).any())
            continue;
        ++best.admissible_count;
        const double sum = eval.value.sum();
        if (!best.feasible || sum < best_sum) {
            best.feasible = true;
            best_sum = sum;
            best.actions = actions;
            best.policy = pi;
            best.value = eval.value;
            best.safety = eval.safety;
        }
    }
    return best;
}

} // namespace safedp
