#pragma once

#include "safedp/model.hpp"

namespace safedp {

/**
 * Blocks of a transition matrix in canonical (H, U, E) order:
 *
 *     P = [ Q    PHU  PHE  ]
 *         [ absorbing rows ]
 */
struct BlockDecomposition {
    Matrix Q;
    Matrix PHU;
    Matrix PHE;
    Matrix boundary_rows; ///< rows of U and E over all states
};

BlockDecomposition decompose(const Matrix& P, const StatePartition& partition);

struct TransienceCheck {
    bool transient = false;
    double spectral_radius = 0.0;
};

/// Chains whose spectral radius on H is at least this are treated as recurrent.
inline constexpr double transience_threshold = 1.0 - 1e-10;

/// Power iteration from 1/|H| with at most 10^4 steps.
TransienceCheck check_transient(const Matrix& Q);

/// G = (I - Q)^-1 by dense LU. Throws NotTransient.
Matrix green(const Matrix& Q);

/// Truncated Neumann sum, stopped once ||Q^K||_inf < tol. Reference only.
Matrix green_series(const Matrix& Q, double tol = 1e-12, std::size_t max_terms = 1000000);

/// Q(pi) and G(pi) of a policy; throws NotTransient.
struct InducedChain {
    Matrix P;
    BlockDecomposition blocks;
    Matrix G;
};

InducedChain induced_chain(const MdpModel& model, const Policy& policy);

/// Expected visits to each taboo state before absorption, mu|_H G.
Vector occupation(const MdpModel& model, const Policy& policy, const Vector& initial);

/// Law of the absorbing state over U then E.
Vector hitting(const MdpModel& model, const Policy& policy, const Vector& initial);

/**
 * ||lambda - mu - gamma (P - I)||_inf with gamma extended by zero on U and E
 * and lambda extended by zero on H.
 */
double evolution_residual(const Vector& initial, const Vector& occupation_h,
                          const Vector& hitting_ue, const Matrix& P);

} // namespace safedp
