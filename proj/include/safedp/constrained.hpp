#pragma once

#include "safedp/bellman.hpp"
#include "safedp/evaluation.hpp"
#include "safedp/model.hpp"
#include "safedp/parallel.hpp"
#include "safedp/simplex.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace safedp {

/// Shared tolerance for "S_pi <= p" style comparisons.
inline constexpr double safety_tol = 1e-10;

/// Outcome of a safety-constrained solve.
struct ConstrainedSolveReport {
    std::string method;
    bool feasible = false;
    bool converged = false;
    Vector value;                     ///< over H
    std::optional<Policy> policy;     ///< a single admissible policy when one is known
    Vector policy_value;              ///< V of that policy
    Vector policy_safety;             ///< S of that policy
    Vector multipliers;               ///< one per taboo state; empty when unused
    double gap = std::numeric_limits<double>::quiet_NaN();
    /// Dual ascent only: upper bound on max q_k from the subgradient cuts.
    Vector dual_bound;
    std::size_t iterations = 0;
    std::vector<std::size_t> infeasible_states;

    /// Pure-policy value iteration only: coordinate-wise minimum of V_pi over
    /// the admissible set, and whether a single admissible policy attains the
    /// iteration's fixed point.
    Vector coordinatewise_min;
    bool single_policy_realizes = true;
};

/// Component-wise V_pi + lambda o (S_pi - p). Throws NotTransient.
Vector lagrangian(const MdpModel& model, const Policy& policy, const Vector& multipliers, double p);

/**
 * Per-(i,u) offsets of the dual Bellman operator:
 *     K(u,i) lambda(i) - p (lambda(i) - sum_{j in H} p(i,u,j) lambda(j)).
 */
Matrix dual_offsets(const DecisionBlocks& blocks, const Vector& multipliers, double p);

struct DualInnerResult {
    Vector q;
    std::vector<std::size_t> actions;
    std::size_t iterations = 0;
};

/// Fixed point of q <- min_pi [R_pi + K_pi o lambda - p (I - Q(pi)) lambda + Q(pi) q].
DualInnerResult dual_inner(const MdpModel& model, const Vector& multipliers, double p,
                           const BellmanOptions& opts = {.tol = 1e-12}, const Vector* warm_start = nullptr);

struct DualOptions {
    double alpha0 = 1.0;
    double decay = 50.0; ///< step alpha_n = alpha0 / (1 + n / decay)
    std::size_t max_outer = 2000;
    double tol = 1e-6;
    BellmanOptions inner{.tol = 1e-12};
    /// Evaluate q_k at the maximizer of its cut model each round.
    bool probes = true;
    /// Per-state optimum from another method; enables the gap stopping rule.
    std::optional<Vector> oracle;
    Exec exec = Exec::parallel;
};

/**
 * Projected subgradient ascent on the dual. Each taboo state k carries the
 * multiplier of its constraint S_pi(k) <= p; q_k(lambda_k) is coordinate k of
 * dual_inner at the constant vector lambda_k * 1.
 *
 * q_k is concave and piecewise linear in lambda_k, so the subgradients seen so
 * far bound its maximum from above. The run stops once that bound is within
 * tol of the best q_k for every k, the step falls below tol, or the oracle gap
 * does. Each round also evaluates q_k at the maximizer of the cut model.
 */
ConstrainedSolveReport dual_ascent(const MdpModel& model, double p, const DualOptions& opts = {});

/// dual_ascent ran out of outer iterations; carries the partial report.
class DualNotConverged : public MaxIterExceeded {
public:
    DualNotConverged(const std::string& what, ConstrainedSolveReport report)
        : MaxIterExceeded(what, report.value, report.iterations), report_(std::move(report)) {}
    const ConstrainedSolveReport& report() const noexcept { return report_; }

private:
    ConstrainedSolveReport report_;
};

/**
 * LP over (l, lambda) for one start state k:
 *     maximize   l(k) - p lambda
 *     subject to l(i) - sum_j p(i,u,j) l(j) - K(u,i) lambda <= rho(u,i)  for all (i,u)
 *                l >= 0, lambda >= 0.
 * lambda is dropped when K vanishes; all-zero rows with rho >= 0 are dropped.
 */
struct LpProblem {
    LinearProgram lp;
    std::size_t start = 0;
    double p = 0.0;
    bool has_multiplier = false;
};

LpProblem build_lp(const MdpModel& model, double p, std::size_t start);
std::vector<LpProblem> build_lp(const MdpModel& model, double p);

struct LpSolution {
    Vector l;           ///< l*(k) from the start-k problem
    Vector multipliers; ///< lambda*(k)
    Vector value;       ///< l*(k) - p lambda*(k)
    double objective = 0.0;
    std::vector<LpResult> raw;
};

/// Throws Infeasible when the start state cannot meet the bound.
LpResult solve_lp(const LpProblem& problem);
LpSolution solve_lp(const std::vector<LpProblem>& problems);

struct PurePolicyRecord {
    std::size_t code = 0;
    std::vector<std::size_t> actions;
    Vector value;
    Vector safety;
};

/// V and S of every pure policy in code order; nullopt marks non-transient ones.
std::vector<std::optional<PurePolicyRecord>> evaluate_pure_policies(const MdpModel& model,
                                                                    std::size_t cap, Exec exec);

struct AdmissibleSet {
    std::vector<PurePolicyRecord> admissible;
    std::vector<std::size_t> non_transient; ///< codes
    std::size_t total = 0;
};

inline constexpr std::size_t default_policy_cap = 1000000;

/// Pure policies with S_pi <= p. Throws CapExceeded.
AdmissibleSet enumerate_admissible(const MdpModel& model, double p,
                                   std::size_t cap = default_policy_cap, Exec exec = Exec::parallel);

struct ConeCheck {
    bool admissible = false;
    Vector alpha; ///< coefficients of M_pi in the columns of I - Q(pi)
};

/// Solves (I - Q(pi)) alpha = p (I - Q(pi)) 1 - K_pi. Throws NotTransient.
ConeCheck cone_check(const MdpModel& model, const Policy& policy, double p);

/// Value iteration restricted to pure admissible policies. Throws Infeasible or CapExceeded.
ConstrainedSolveReport constrained_vi_pure(const MdpModel& model, double p,
                                           const BellmanOptions& opts = {},
                                           std::size_t cap = default_policy_cap);

/// Admissible distributions at one state for q-relative safety.
struct RelativeAdmissibleSet {
    std::vector<std::size_t> pure_actions; ///< actions with K <= q L
    std::vector<Vector> vertices;          ///< pure vertices first, then boundary mixtures
};

std::vector<RelativeAdmissibleSet> relative_admissible(const MdpModel& model, double q);

/// Bellman iteration over the vertices of each state's admissible set. Throws Infeasible.
ConstrainedSolveReport relative_vi(const MdpModel& model, double q, const BellmanOptions& opts = {});

/// q = p / (1 - p).
double p_to_q(double p);
/// q for p = num / den, exact when den - num divides num.
double p_to_q(std::int64_t num, std::int64_t den);

} // namespace safedp
