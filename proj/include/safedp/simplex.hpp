#pragma once

#include "safedp/model.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace safedp {

/// maximize c'x subject to A x <= b, x >= 0.
struct LinearProgram {
    Matrix A;
    Vector b;
    Vector c;
    std::vector<std::string> variable_names;
    std::vector<std::string> row_names;

    std::size_t n_vars() const noexcept { return static_cast<std::size_t>(c.size()); }
    std::size_t n_rows() const noexcept { return static_cast<std::size_t>(b.size()); }
};

struct LpResult {
    Vector x;
    double objective = 0.0;
    /// Basic column per row. Columns [0, n) are variables, [n, n+m) slacks,
    /// then artificials.
    std::vector<std::size_t> basis;
    std::size_t pivots = 0;
};

/// Pivot elements below this magnitude raise NumericalInstability.
inline constexpr double min_pivot = 1e-9;

/**
 * Dense two-phase tableau simplex with Bland's rule.
 * Throws Unbounded, LpInfeasible or NumericalInstability.
 */
LpResult solve_simplex(const LinearProgram& lp);

/// Plain-text dump of rows, objective and basis (initial basis when result is null).
void write_tableau(std::ostream& out, const LinearProgram& lp, const LpResult* result = nullptr);

} // namespace safedp
