#pragma once

#include "safedp/bellman.hpp"
#include "safedp/evaluation.hpp"
#include "safedp/model.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace safedp::testing {

struct CorpusOptions {
    std::size_t min_states = 3;
    std::size_t max_states = 6;
    std::size_t max_taboo = 4;
    std::size_t max_actions = 3;
    std::size_t min_forbidden = 0;
    /// Every (i,u) in H leaves H with at least this probability, so every
    /// policy is transient.
    double min_exit = 0.1;
    double max_reward = 5.0;
};

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Nonnegative weights summing to total; roughly a third of the entries are zero.
inline std::vector<double> random_split(std::mt19937_64& rng, std::size_t n, double total) {
    std::vector<double> w(n, 0.0);
    if (n == 0)
        return w;
    double sum = 0.0;
    for (auto& x : w) {
        x = uniform(rng) < 0.35 ? 0.0 : uniform(rng, 0.05, 1.0);
        sum += x;
    }
    if (sum == 0.0) {
        w[pick(rng, 0, n - 1)] = 1.0;
        sum = 1.0;
    }
    for (auto& x : w)
        x *= total / sum;
    return w;
}

inline MdpModel random_model(std::mt19937_64& rng, const CorpusOptions& opts = {}) {
    const std::size_t n = pick(rng, opts.min_states, opts.max_states);
    const std::size_t h = pick(rng, 1, std::min(opts.max_taboo, n - 1 - opts.min_forbidden));
    const std::size_t u_count = pick(rng, opts.min_forbidden, n - h - 1);
    const std::size_t m = pick(rng, 1, opts.max_actions);

    MdpModel model;
    for (std::size_t i = 0; i < n; ++i)
        model.states.push_back("s" + std::to_string(i));
    for (std::size_t u = 0; u < m; ++u)
        model.actions.push_back("u" + std::to_string(u + 1));
    model.partition = {h, u_count, n - h - u_count};
    model.rewards = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t u = 0; u < m; ++u) {
        Matrix t = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            if (i >= h) {
                t(row, row) = 1.0;
                continue;
            }
            const double exit = uniform(rng, opts.min_exit, 1.0);
            const auto stay = random_split(rng, h, 1.0 - exit);
            const auto leave = random_split(rng, n - h, exit);
            for (std::size_t j = 0; j < h; ++j)
                t(row, static_cast<Eigen::Index>(j)) = stay[j];
            for (std::size_t j = h; j < n; ++j)
                t(row, static_cast<Eigen::Index>(j)) = leave[j - h];
            t(row, static_cast<Eigen::Index>(n - 1)) += 1.0 - t.row(row).sum();
            model.rewards(static_cast<Eigen::Index>(u), row) = uniform(rng, 0.0, opts.max_reward);
        }
        model.transitions.push_back(std::move(t));
    }
    return model;
}

inline Policy random_policy(const MdpModel& model, std::mt19937_64& rng, bool pure = false) {
    Matrix probs = Matrix::Zero(static_cast<Eigen::Index>(model.n_states()),
                                static_cast<Eigen::Index>(model.n_actions()));
    for (std::size_t i = 0; i < model.n_states(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        if (i >= model.n_taboo()) {
            probs(row, 0) = 1.0;
            continue;
        }
        if (pure) {
            probs(row, static_cast<Eigen::Index>(pick(rng, 0, model.n_actions() - 1))) = 1.0;
            continue;
        }
        const auto w = random_split(rng, model.n_actions(), 1.0);
        for (std::size_t u = 0; u < model.n_actions(); ++u)
            probs(row, static_cast<Eigen::Index>(u)) = w[u];
        probs.row(row) /= probs.row(row).sum();
    }
    return Policy(std::move(probs));
}

/// Initial distribution over all states, occasionally with mass on U or E.
inline Vector random_initial(const MdpModel& model, std::mt19937_64& rng) {
    const bool spill = uniform(rng) < 0.3;
    const std::size_t support = spill ? model.n_states() : model.n_taboo();
    const auto w = random_split(rng, support, 1.0);
    Vector mu = Vector::Zero(static_cast<Eigen::Index>(model.n_states()));
    for (std::size_t i = 0; i < support; ++i)
        mu(static_cast<Eigen::Index>(i)) = w[i];
    return mu;
}

inline std::vector<MdpModel> corpus(std::uint64_t seed, std::size_t count, const CorpusOptions& opts = {}) {
    std::mt19937_64 rng(seed);
    std::vector<MdpModel> out;
    for (std::size_t k = 0; k < count; ++k)
        out.push_back(random_model(rng, opts));
    return out;
}

/**
 * A feasible safety bound that tends to bind: between the largest minimal
 * safety and the largest safety of the unconstrained optimal policy.
 */
inline double binding_bound(const MdpModel& model, std::mt19937_64& rng) {
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(model.n_taboo()));
    const double floor = safety(model, safest_policy(model, zero).policy).maxCoeff();
    const auto greedy = value_iteration(model, zero);
    const double top = safety(model, greedy.policy).maxCoeff();
    return std::min(1.0, floor + uniform(rng, 0.2, 0.8) * std::max(0.0, top - floor));
}

} // namespace safedp::testing
