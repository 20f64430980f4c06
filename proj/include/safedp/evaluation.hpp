#pragma once

#include "safedp/chain.hpp"
#include "safedp/model.hpp"

#include <cstddef>
#include <span>

namespace safedp {

/// One-step quantities of a policy over H.
struct PolicyCostInputs {
    Vector reward;         ///< R_pi(i) = sum_u pi(i,u) rho(u,i)
    Vector forbidden_exit; ///< K_pi(i), one-step probability of entering U
    Vector target_exit;    ///< L_pi(i), one-step probability of entering E
};

PolicyCostInputs cost_inputs(const MdpModel& model, const Policy& policy);

/// Expected accumulated cost until absorption, over H. Throws NotTransient.
Vector value(const MdpModel& model, const Policy& policy);
/// Probability of entering U before E, over H.
Vector safety(const MdpModel& model, const Policy& policy);
/// Probability of entering E before U, over H.
Vector reach(const MdpModel& model, const Policy& policy);

/// Everything the closed forms produce for one policy, sharing one LU.
struct PolicyEvaluation {
    Matrix Q;
    Matrix G;
    PolicyCostInputs inputs;
    Vector value;
    Vector safety;
    Vector reach;
};

PolicyEvaluation evaluate(const MdpModel& model, const Policy& policy);

struct IterOptions {
    double tol = 1e-10;
    std::size_t max_iter = 1000000;
};

struct IterativeResult {
    Vector values;
    std::size_t iterations = 0;
};

/// x <- b + Q x until successive iterates differ by at most tol in sup norm.
IterativeResult iterate_affine(const Matrix& Q, const Vector& b, Vector x0, const IterOptions& opts);

IterativeResult value_iterative(const MdpModel& model, const Policy& policy, const Vector& v0,
                                const IterOptions& opts = {});
IterativeResult safety_iterative(const MdpModel& model, const Policy& policy, const Vector& s0,
                                 const IterOptions& opts = {});

/// max_{j in subset} S(j).
double set_safety(const Vector& safety_h, std::span<const std::size_t> subset);

// Full-space extensions with the boundary conventions on U and E.
Vector extend_value(const MdpModel& model, const Vector& value_h);
Vector extend_safety(const MdpModel& model, const Vector& safety_h);
Vector extend_reach(const MdpModel& model, const Vector& reach_h);

} // namespace safedp
