#pragma once

#include "safedp/evaluation.hpp"
#include "safedp/model.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace safedp {

/**
 * Per-action blocks of the taboo part of a model, laid out for repeated
 * Bellman sweeps. All tables are indexed (state in H, action).
 */
struct DecisionBlocks {
    std::vector<Matrix> Q; ///< Q[u](i, j) = p(i, u, j) for i, j in H
    Matrix reward;         ///< rho(u, i)
    Matrix forbidden_exit; ///< K(u, i)
    Matrix target_exit;    ///< L(u, i)

    explicit DecisionBlocks(const MdpModel& model);
    std::size_t n_taboo() const noexcept { return static_cast<std::size_t>(reward.rows()); }
    std::size_t n_actions() const noexcept { return static_cast<std::size_t>(reward.cols()); }
};

/// Two action costs closer than this (relative) count as a tie.
inline constexpr double tie_tol = 1e-12;

struct GreedyStep {
    Vector value;
    std::vector<std::size_t> actions; ///< argmin per taboo state, lowest index on ties
};

/// TV(i) = min_u [stage_cost(i,u) + sum_{j in H} p(i,u,j) V(j)].
GreedyStep bellman_sweep(const DecisionBlocks& blocks, const Matrix& stage_cost, const Vector& v);

/// Sweep with stage cost rho(u,i) + offsets(i,u); offsets may be null.
GreedyStep bellman_apply(const MdpModel& model, const Vector& v, const Matrix* offsets = nullptr);

struct BellmanOptions {
    double tol = 1e-10;
    std::size_t max_iter = 1000000;
    bool record_trace = false;
    /// Iterates beyond divergence_factor * (1 + max|cost| * |H|) abort with Diverging.
    double divergence_factor = 1e6;
};

struct BellmanResult {
    Vector value;
    std::vector<std::size_t> actions;
    Policy policy;
    std::size_t iterations = 0;
    double residual = 0.0;
    std::vector<Vector> trace; ///< V^0, V^1, ... when requested
};

/// Value iteration for an arbitrary stage-cost table.
BellmanResult minimize_stage_cost(const MdpModel& model, const DecisionBlocks& blocks,
                                  const Matrix& stage_cost, const Vector& v0,
                                  const BellmanOptions& opts);

/// Minimal expected cost V* and a greedy pure policy.
BellmanResult value_iteration(const MdpModel& model, const Vector& v0, const BellmanOptions& opts = {});

/// Minimal safety S* (probability of entering U first) and a greedy pure policy.
BellmanResult safest_policy(const MdpModel& model, const Vector& s0, const BellmanOptions& opts = {});

struct CertificateReport {
    std::vector<std::string> membership_violations;
    std::vector<std::string> dominance_violations;
    bool ok() const noexcept { return membership_violations.empty() && dominance_violations.empty(); }
};

/**
 * Checks that vstar lies in {V : (I - Q(pi)) V <= R_pi} for each sampled
 * policy and that vstar <= V_pi for each sampled transient policy.
 */
CertificateReport certify_supremum(const MdpModel& model, const Vector& vstar,
                                   const std::vector<Policy>& policies, double tol = 1e-9);

} // namespace safedp
